#include "aifnav/harness/pca.hpp"

#include <Eigen/Dense>
#include <fstream>
#include <stdexcept>

namespace aifnav::harness {

PcaResult pca_project(const std::vector<std::vector<float>>& rows, int k) {
    const int n = static_cast<int>(rows.size());
    if (n < 3) throw std::invalid_argument("pca_project: need at least 3 samples");
    const int d = static_cast<int>(rows[0].size());
    if (d < 1) throw std::invalid_argument("pca_project: need at least 1 dimension");
    for (const auto& r : rows)
        if (static_cast<int>(r.size()) != d)
            throw std::invalid_argument("pca_project: ragged input rows");

    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = rows[i][j];
    Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    Eigen::MatrixXd cov = (X.transpose() * X) / double(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("pca_project: eigendecomposition failed");
    const Eigen::VectorXd& evals = es.eigenvalues();   // ascending
    const Eigen::MatrixXd& evecs = es.eigenvectors();

    double total_var = 0;
    for (int j = 0; j < d; ++j) total_var += std::max(0.0, evals(j));
    const double rank_eps = 1e-12 * std::max(1.0, total_var);

    PcaResult out;
    out.dims = d;
    out.mean.assign(d, 0.0f);
    for (int j = 0; j < d; ++j) out.mean[j] = float(mean(j));

    int want = std::min(k, d);
    for (int c = 0; c < want; ++c) {
        int idx = d - 1 - c;  // largest first
        if (evals(idx) <= rank_eps) break;
        std::vector<float> axis(d);
        for (int j = 0; j < d; ++j) axis[j] = float(evecs(j, idx));
        out.basis.push_back(std::move(axis));
        out.explained.push_back(total_var > 0 ? float(evals(idx) / total_var) : 0.0f);
    }
    out.components = static_cast<int>(out.basis.size());
    out.degenerate = out.components < std::min(k, d);

    out.projected.assign(n, std::vector<float>(out.components, 0.0f));
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < out.components; ++c) {
            double s = 0;
            for (int j = 0; j < d; ++j) s += X(i, j) * out.basis[c][j];
            out.projected[i][c] = float(s);
        }
    return out;
}

void pca_write_csv(const PcaResult& pca, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# explained";
    for (float e : pca.explained) out << "," << e;
    out << "\n";
    for (int c = 0; c < pca.components; ++c) out << (c ? ",pc" : "pc") << c + 1;
    out << "\n";
    for (const auto& row : pca.projected) {
        for (int c = 0; c < pca.components; ++c) out << (c ? "," : "") << row[c];
        out << "\n";
    }
}

}  // namespace aifnav::harness
