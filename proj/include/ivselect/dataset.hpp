#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ivselect {

/// Outcome, binary treatment and the candidate matrix of pre-treatment
/// variables (one column per candidate).
struct Dataset {
    Eigen::VectorXd y;
    Eigen::VectorXd d;
    Eigen::MatrixXd q;
    std::vector<std::string> names;
    std::string outcome_name = "y";
    std::string treatment_name = "d";

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    std::size_t p() const { return static_cast<std::size_t>(q.cols()); }

    /// Throws InputError on shape mismatch, non-finite cells or a
    /// non-binary treatment.
    void validate() const;

    /// Column names, generating "q1".."qp" when none were supplied.
    std::vector<std::string> candidate_names() const;
};

/// Rows `rows` of `m`, in the given order.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows);
Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows);

}  // namespace ivselect
