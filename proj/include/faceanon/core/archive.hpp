#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "faceanon/core/common.hpp"
#include "faceanon/core/tensor.hpp"

namespace faceanon {

/// Flat container of named arrays plus a free-form JSON meta string. One
/// format serves the preprocessed dataset cache and the checkpoints; payloads
/// are raw little-endian bytes so round-trips are bit-exact.
class Archive {
public:
    using Entry = std::variant<Tensor<float>, Tensor<double>, Tensor<std::int64_t>,
                               Tensor<std::uint8_t>>;

    static_assert(std::endian::native == std::endian::little,
                  "archive format assumes a little-endian host");

    void set_meta(std::string json) { meta_ = std::move(json); }
    const std::string& meta() const { return meta_; }

    template <typename T>
    void put(const std::string& name, Tensor<T> t) {
        entries_[name] = std::move(t);
    }

    bool contains(const std::string& name) const { return entries_.count(name) > 0; }

    template <typename T>
    const Tensor<T>& get(const std::string& name) const {
        auto it = entries_.find(name);
        require(it != entries_.end(), "archive", "archive entry not found: " + name);
        const auto* p = std::get_if<Tensor<T>>(&it->second);
        require(p != nullptr, "archive", "archive entry has unexpected dtype: " + name);
        return *p;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_) out.push_back(k);
        return out;
    }

    void save(const std::filesystem::path& path) const {
        // Write-temp-then-rename keeps partially written files from ever
        // being picked up as checkpoints.
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            require(os.good(), "io", "cannot open for write: " + tmp.string());
            write_stream(os);
            require(os.good(), "io", "write failed: " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

    static Archive load(const std::filesystem::path& path) {
        std::ifstream is(path, std::ios::binary);
        require(is.good(), "io", "cannot open: " + path.string());
        return read_stream(is, path.string());
    }

private:
    static constexpr char kMagic[4] = {'F', 'A', 'T', 'N'};
    static constexpr std::uint32_t kVersion = 1;

    template <typename T>
    static constexpr std::uint8_t dtype_code() {
        if constexpr (std::is_same_v<T, float>) return 0;
        else if constexpr (std::is_same_v<T, double>) return 1;
        else if constexpr (std::is_same_v<T, std::int64_t>) return 2;
        else return 3;
    }

    void write_stream(std::ostream& os) const {
        os.write(kMagic, 4);
        write_pod(os, kVersion);
        write_pod(os, static_cast<std::uint64_t>(meta_.size()));
        os.write(meta_.data(), static_cast<std::streamsize>(meta_.size()));
        write_pod(os, static_cast<std::uint32_t>(entries_.size()));
        for (const auto& [name, entry] : entries_) {
            write_pod(os, static_cast<std::uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            std::visit(
                [&](const auto& t) {
                    using T = typename std::decay_t<decltype(t)>;
                    using Scalar = std::decay_t<decltype(t[0])>;
                    (void)sizeof(T);
                    write_pod(os, dtype_code<Scalar>());
                    write_pod(os, static_cast<std::uint8_t>(t.ndim()));
                    for (auto d : t.shape()) write_pod(os, static_cast<std::int64_t>(d));
                    os.write(reinterpret_cast<const char*>(t.data()),
                             static_cast<std::streamsize>(sizeof(Scalar) * t.numel()));
                },
                entry);
        }
    }

    static Archive read_stream(std::istream& is, const std::string& what) {
        char magic[4];
        is.read(magic, 4);
        require(is.good() && std::memcmp(magic, kMagic, 4) == 0, "archive",
                "not an archive file: " + what);
        const auto version = read_pod<std::uint32_t>(is);
        require(version == kVersion, "archive", "unsupported archive version in " + what);
        Archive a;
        const auto meta_len = read_pod<std::uint64_t>(is);
        a.meta_.resize(meta_len);
        is.read(a.meta_.data(), static_cast<std::streamsize>(meta_len));
        const auto count = read_pod<std::uint32_t>(is);
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto name_len = read_pod<std::uint32_t>(is);
            std::string name(name_len, '\0');
            is.read(name.data(), name_len);
            const auto dtype = read_pod<std::uint8_t>(is);
            const auto ndim = read_pod<std::uint8_t>(is);
            Shape shape(ndim);
            for (auto& d : shape) d = read_pod<std::int64_t>(is);
            switch (dtype) {
                case 0: a.entries_[name] = read_tensor<float>(is, shape); break;
                case 1: a.entries_[name] = read_tensor<double>(is, shape); break;
                case 2: a.entries_[name] = read_tensor<std::int64_t>(is, shape); break;
                case 3: a.entries_[name] = read_tensor<std::uint8_t>(is, shape); break;
                default: fail("archive", "unknown dtype in " + what);
            }
        }
        require(is.good(), "archive", "truncated archive: " + what);
        return a;
    }

    template <typename T>
    static Tensor<T> read_tensor(std::istream& is, const Shape& shape) {
        Tensor<T> t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(sizeof(T) * t.numel()));
        return t;
    }

    template <typename P>
    static void write_pod(std::ostream& os, P v) {
        os.write(reinterpret_cast<const char*>(&v), sizeof(P));
    }

    template <typename P>
    static P read_pod(std::istream& is) {
        P v{};
        is.read(reinterpret_cast<char*>(&v), sizeof(P));
        return v;
    }

    std::string meta_;
    std::map<std::string, Entry> entries_;
};

}  // namespace faceanon
