#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "vucoord/scenario.hpp"

namespace vucoord {

/// Positive-sequence network matrices. The negative-sequence matrices are
/// the elementwise conjugates and are exposed as accessors rather than
/// stored twice.
struct SequenceNetworkModel {
    Eigen::MatrixXcd z_net; // bus-path impedance matrix, m x m
    Eigen::VectorXcd y_load; // diagonal of the load admittance matrix
    Eigen::MatrixXcd h;      // (I + Z_net Y_L)^{-1}
    Eigen::MatrixXcd z_eq;   // H Z_net

    int bus_count() const { return static_cast<int>(z_net.rows()); }
    Eigen::MatrixXcd h_minus() const { return h.conjugate(); }
    Eigen::MatrixXcd z_eq_minus() const { return z_eq.conjugate(); }
};

/// Line ids on the unique slack-to-bus path, indexed by bus-1.
/// Throws ValidationError on cycles or disconnected buses.
std::vector<std::vector<int>> build_path_sets(const Scenario& scenario);

/// Z_ii = sum of path impedances, Z_ij = sum over the shared path segment.
Eigen::MatrixXcd build_impedance_matrix(const Scenario& scenario,
                                        const std::vector<std::vector<int>>& path_sets);

/// h = (I + z_net * diag(y)) ^ {-1}, z_eq = h * z_net, computed by column
/// solves. Throws ModelError (with a condition estimate) when the system
/// matrix is numerically singular; the inversion residual is checked
/// against 1e-10.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>
build_equivalent_matrices(const Eigen::MatrixXcd& z_net, const Eigen::VectorXcd& y_diag);

SequenceNetworkModel build_network_model(const Scenario& scenario);

} // namespace vucoord
