#pragma once

#include <array>
#include <string>
#include <vector>

#include "feinfn/grid.hpp"
#include "feinfn/layers.hpp"

namespace feinfn {

struct IffConfig {
    i64 latent_channels = 128;  // C: encoder feature width
    i64 out_bands = 31;         // S: fused feature width
    i64 hidden = 32;
    int pe_levels = 10;  // L
    bool spatial_branch = true;
    bool frequency_branch = true;

    void validate() const;
    i64 spatial_in_dim() const { return 3 * latent_channels + 4 * pe_levels; }
    i64 frequency_in_channels() const { return 2 * latent_channels + 2; }
};

/// Everything about a set of HR queries that is pure data: gather indices
/// into the latent maps plus relative-coordinate features. Built once per
/// batch outside the autodiff tape.
struct QueryBatch {
    i64 count = 0;               // Q
    std::vector<i64> spe_rows;   // Q*4 row indices into the flattened LR latent
    std::vector<i64> spa_rows;   // Q*4 row indices into the flattened HR latent
    std::vector<i64> patch_rows; // Q*16 row indices into the flattened HR latent (4x4 window)
    Tensor delta;                // (Q*4, 2) query minus neighbor center, LR-cell units
    Tensor pe;                   // (Q*4, 4*pe_levels) frequency-encoded deltas
    Tensor areas;                // (Q, 4) normalized diagonal areas (sum to 1 per query)
};

/// queries are (row, col) coordinates in [-1,1]^2 on the HR grid.
QueryBatch build_query_batch(const std::vector<std::array<double, 2>>& queries,
                             const CoordinateGrid& lr_grid, const CoordinateGrid& hr_grid,
                             int pe_levels);

/// Latent rows pulled onto the tape for one batch of queries.
struct QueryCodes {
    nn::Var z_spe;   // (Q, 4, C)
    nn::Var z_hp;    // (Q, 4, C) high-passed spectral codes
    nn::Var z_spa;   // (Q, 4, C)
    nn::Var z_patch; // (Q, 4, 4, C)
};

/// lr_latent: (1, h, w, C); hr_latent: (1, H, W, C).
QueryCodes gather_codes(const QueryBatch& batch, const nn::Var& lr_latent, const nn::Var& hr_latent);

/// Identity minus valid-window 3x3 box mean; kills constants exactly,
/// including at borders.
nn::Var high_pass(const nn::Var& latent);

struct IffParams {
    IffConfig config;
    std::array<nn::Linear, 4> theta;  // per-neighbor MLP -> scores ++ values
    nn::Conv2d alpha1, alpha2;        // amplitude branch, 1x1 convolutions
    nn::Conv2d beta1, beta2;          // phase branch, 3x3 convolutions

    static IffParams create(nn::ParamStore& params, const std::string& prefix,
                            const IffConfig& config, Rng& rng);
};

struct IffOutput {
    nn::Var eps_s;  // (Q, S)
    nn::Var eps_f;  // (Q, S)
};

nn::Var spatial_iff(const QueryBatch& batch, const QueryCodes& codes, const IffParams& params);
nn::Var frequency_iff(const QueryBatch& batch, const QueryCodes& codes, const IffParams& params);

/// Runs both branches (disabled branches yield zeros of the right shape).
IffOutput spa_fre_iff(const QueryBatch& batch, const QueryCodes& codes, const IffParams& params);

}  // namespace feinfn
