#pragma once

#include <string>
#include <vector>

namespace aifnav::harness {

// Top-k principal components via covariance eigendecomposition.
struct PcaResult {
    int dims = 0;
    int components = 0;                        // <= requested (less if rank-deficient)
    std::vector<float> mean;                   // [dims]
    std::vector<std::vector<float>> basis;     // [components][dims], orthonormal
    std::vector<float> explained;              // variance fraction, non-increasing
    std::vector<std::vector<float>> projected; // [n][components]
    bool degenerate = false;                   // rank < requested
};

// rows: n samples x dims. Requires n >= 3 and dims >= 1; k defaults to 3.
PcaResult pca_project(const std::vector<std::vector<float>>& rows, int k = 3);

// CSV with one projected sample per line plus an explained-variance header.
void pca_write_csv(const PcaResult& pca, const std::string& path);

}  // namespace aifnav::harness
