#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "faceanon/core/common.hpp"
#include "faceanon/core/rng.hpp"

namespace faceanon {

/// Per-(camera, person) target-identity assignment. Stable within a camera;
/// the same person under a new camera gets an independent draw, which breaks
/// long-term tracking across cameras. Draws are keyed (seed, camera, person)
/// rather than sequential, so lookup order never changes the assignment.
class ControlMapping {
public:
    ControlMapping(std::uint64_t seed, std::int64_t n_identities)
        : seed_(seed), n_(n_identities) {
        require(n_ >= 1, "config", "ControlMapping: need at least one identity");
    }

    std::int64_t lookup(const std::string& camera_id, const std::string& person_id) {
        const auto key = camera_id + "/" + person_id;
        std::lock_guard<std::mutex> lock(*mu_);
        auto it = table_.find(key);
        if (it != table_.end()) return it->second;
        const auto drawn = draw(camera_id, person_id);
        table_.emplace(key, drawn);
        return drawn;
    }

    std::int64_t n_identities() const { return n_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t size() const { return table_.size(); }

    nlohmann::json to_json() const {
        nlohmann::json entries = nlohmann::json::object();
        for (const auto& [k, v] : table_) entries[k] = v;
        return {{"seed", seed_}, {"n", n_}, {"entries", entries}};
    }

    static ControlMapping from_json(const nlohmann::json& j) {
        ControlMapping m(j.at("seed").get<std::uint64_t>(), j.at("n").get<std::int64_t>());
        for (const auto& [k, v] : j.at("entries").items())
            m.table_[k] = v.get<std::int64_t>();
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream os(path);
        os << to_json().dump(2) << "\n";
        require(os.good(), "io", "failed to write mapping: " + path);
    }

    static ControlMapping load(const std::string& path) {
        std::ifstream is(path);
        require(is.good(), "io", "cannot open mapping: " + path);
        return from_json(nlohmann::json::parse(is));
    }

private:
    std::int64_t draw(const std::string& camera_id, const std::string& person_id) const {
        Rng rng = Rng::derive(seed_, fnv1a(camera_id), fnv1a(person_id));
        return static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n_)));
    }

    std::uint64_t seed_;
    std::int64_t n_;
    std::map<std::string, std::int64_t> table_;
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

/// Spec-facing alias: first lookup draws, later lookups are stable.
inline std::int64_t remap_identity(ControlMapping& mapping, const std::string& camera_id,
                                   const std::string& person_id) {
    return mapping.lookup(camera_id, person_id);
}

}  // namespace faceanon
