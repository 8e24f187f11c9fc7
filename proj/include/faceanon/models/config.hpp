#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "faceanon/core/common.hpp"

namespace faceanon {

/// Network hyperparameters. Defaults reproduce the reference 128x128 layout:
/// generator encoder 32-64-128-256-256 down to a 256x4x4 bottleneck,
/// discriminator 32-64-128-256-512 with FC 1024 -> 1, control embedder
/// FC stack to 512 reshaped to 32x4x4 and convolved up to 256x4x4.
/// Other power-of-two resolutions keep the 4x4 bottleneck and derive the
/// channel ladder with the same doubling-with-cap rule.
struct ModelConfig {
    int resolution = 128;
    int n_identities = 0;   // N: control vector length
    int gen_base = 32;      // first generator down-block channels
    int gen_cap = 256;      // generator channel cap (bottleneck width)
    int disc_base = 32;
    int disc_cap = 512;
    int fc_width = 1024;    // discriminator hidden FC width == embedding dim E
    int plain_blocks = 4;   // bottleneck residual blocks
    int embed_fc_layers = 7;
    double leaky_slope = 0.2;

    void validate() const {
        require(resolution >= 8 && (resolution & (resolution - 1)) == 0, "config",
                "resolution must be a power of two >= 8");
        require(n_identities >= 1, "config", "n_identities must be >= 1");
        require(gen_base >= 1 && gen_cap >= gen_base, "config", "bad generator widths");
        require(disc_base >= 1 && disc_cap >= disc_base, "config", "bad discriminator widths");
        require(fc_width >= 1 && plain_blocks >= 0 && embed_fc_layers >= 1, "config",
                "bad head widths");
    }

    /// Down blocks until the spatial dims reach 4x4.
    int num_down_blocks() const {
        int n = 0;
        for (int r = resolution; r > 4; r /= 2) ++n;
        return n;
    }

    std::vector<int> gen_down_channels() const {
        std::vector<int> out;
        for (int i = 0; i < num_down_blocks(); ++i)
            out.push_back(std::min(gen_base << i, gen_cap));
        return out;
    }

    std::vector<int> disc_down_channels() const {
        std::vector<int> out;
        for (int i = 0; i < num_down_blocks(); ++i)
            out.push_back(std::min(disc_base << i, disc_cap));
        return out;
    }

    int bottleneck_channels() const { return gen_down_channels().back(); }

    /// Decoder output channels: stays at the bottleneck width for the first
    /// up block, then halves per block (256,128,64,32,16 at 128x128).
    std::vector<int> gen_up_channels() const {
        std::vector<int> out;
        const int bc = bottleneck_channels();
        for (int j = 0; j < num_down_blocks(); ++j) out.push_back(std::max(bc >> j, 1));
        return out;
    }

    int embed_reshape_channels() const { return std::max(bottleneck_channels() / 8, 1); }
    int embed_fc_width() const { return embed_reshape_channels() * 16; }

    int embedding_dim() const { return fc_width; }  // E

    std::string arch_string() const {
        std::ostringstream os;
        os << "res=" << resolution << ";n=" << n_identities << ";gen=" << gen_base << "/"
           << gen_cap << ";disc=" << disc_base << "/" << disc_cap << ";fc=" << fc_width
           << ";plain=" << plain_blocks << ";efc=" << embed_fc_layers
           << ";slope=" << leaky_slope;
        return os.str();
    }

    std::string arch_hash() const { return hex64(fnv1a(arch_string())); }
};

}  // namespace faceanon
