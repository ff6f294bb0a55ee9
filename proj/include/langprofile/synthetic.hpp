#pragma once

// Seeded synthetic data for demos and tests.

#include <cstdint>
#include <random>

#include "langprofile/matrix.hpp"
#include "langprofile/pipeline.hpp"

namespace langprofile {

/// Standard normal draw via Box-Muller on 53-bit uniforms, so values do not
/// depend on the standard library's distribution implementation.
double standard_normal(std::mt19937_64& rng);

/// `n` points in `dims` dimensions from two isotropic unit Gaussians whose
/// centres are `separation` apart along the first axis. Roughly a third of the
/// rows come from the first blob; `labels` (if given) receives the blob index.
Matrix make_blobs(std::size_t n, std::size_t dims, double separation, std::uint64_t seed,
                  std::vector<int>* labels = nullptr);

/// Feature table with a two-group latent structure: about 30 features load
/// on a shared shift, the rest are noise. Group labels are drawn with a
/// different SLI rate in each blob.
FeatureTable make_blob_table(std::size_t n, std::uint64_t seed);

}  // namespace langprofile
