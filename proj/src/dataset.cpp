#include "ivselect/dataset.hpp"

#include <cmath>
#include <string>

#include "ivselect/errors.hpp"

namespace ivselect {

void Dataset::validate() const {
    const auto n_rows = y.size();
    if (d.size() != n_rows || q.rows() != n_rows) {
        throw InputError("dataset: outcome, treatment and candidate rows differ (" +
                         std::to_string(y.size()) + ", " + std::to_string(d.size()) + ", " +
                         std::to_string(q.rows()) + ")");
    }
    if (!names.empty() && names.size() != static_cast<std::size_t>(q.cols())) {
        throw InputError("dataset: " + std::to_string(names.size()) + " names for " +
                         std::to_string(q.cols()) + " candidate columns");
    }
    const auto cols = candidate_names();
    for (Eigen::Index i = 0; i < n_rows; ++i) {
        if (!std::isfinite(y[i])) {
            throw InputError("dataset: non-finite " + outcome_name + " at row " + std::to_string(i + 1));
        }
        if (d[i] != 0.0 && d[i] != 1.0) {
            throw InputError("dataset: treatment " + treatment_name + " is not binary at row " +
                             std::to_string(i + 1));
        }
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            if (!std::isfinite(q(i, j))) {
                throw InputError("dataset: non-finite value in column " + cols[j] + " at row " +
                                 std::to_string(i + 1));
            }
        }
    }
}

std::vector<std::string> Dataset::candidate_names() const {
    if (!names.empty()) return names;
    std::vector<std::string> out;
    out.reserve(q.cols());
    for (Eigen::Index j = 0; j < q.cols(); ++j) out.push_back("q" + std::to_string(j + 1));
    return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out(static_cast<Eigen::Index>(r), j) = m(static_cast<Eigen::Index>(rows[r]), j);
        }
    }
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out[static_cast<Eigen::Index>(r)] = v[static_cast<Eigen::Index>(rows[r])];
    }
    return out;
}

}  // namespace ivselect
