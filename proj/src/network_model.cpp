#include "vucoord/network_model.hpp"

#include <algorithm>
#include <string>

#include "vucoord/errors.hpp"

namespace vucoord {

std::vector<std::vector<int>> build_path_sets(const Scenario& scenario) {
    const int m = scenario.bus_count;
    std::vector<std::vector<int>> adjacency(static_cast<size_t>(m) + 1);
    for (size_t l = 0; l < scenario.lines.size(); ++l) {
        adjacency[static_cast<size_t>(scenario.lines[l].from)].push_back(static_cast<int>(l));
        adjacency[static_cast<size_t>(scenario.lines[l].to)].push_back(static_cast<int>(l));
    }

    std::vector<std::vector<int>> paths(static_cast<size_t>(m) + 1);
    std::vector<int> seen(static_cast<size_t>(m) + 1, 0);
    std::vector<int> line_used(scenario.lines.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int bus = stack.back();
        stack.pop_back();
        for (int l : adjacency[static_cast<size_t>(bus)]) {
            if (line_used[static_cast<size_t>(l)]) continue;
            line_used[static_cast<size_t>(l)] = 1;
            const Line& ln = scenario.lines[static_cast<size_t>(l)];
            int other = ln.from == bus ? ln.to : ln.from;
            if (seen[static_cast<size_t>(other)])
                throw ValidationError("cycle detected at line " + std::to_string(l));
            seen[static_cast<size_t>(other)] = 1;
            paths[static_cast<size_t>(other)] = paths[static_cast<size_t>(bus)];
            paths[static_cast<size_t>(other)].push_back(l);
            stack.push_back(other);
        }
    }
    for (int i = 1; i <= m; ++i)
        if (!seen[static_cast<size_t>(i)])
            throw ValidationError("bus " + std::to_string(i) + " is disconnected from the slack");

    std::vector<std::vector<int>> out(static_cast<size_t>(m));
    for (int i = 1; i <= m; ++i) {
        out[static_cast<size_t>(i - 1)] = paths[static_cast<size_t>(i)];
        std::sort(out[static_cast<size_t>(i - 1)].begin(), out[static_cast<size_t>(i - 1)].end());
    }
    return out;
}

Eigen::MatrixXcd build_impedance_matrix(const Scenario& scenario,
                                        const std::vector<std::vector<int>>& path_sets) {
    const int m = scenario.bus_count;
    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const auto& pi = path_sets[static_cast<size_t>(i)];
            const auto& pj = path_sets[static_cast<size_t>(j)];
            std::complex<double> sum = 0.0;
            // path sets are sorted, intersect by merge
            size_t a = 0, b = 0;
            while (a < pi.size() && b < pj.size()) {
                if (pi[a] == pj[b]) {
                    sum += scenario.lines[static_cast<size_t>(pi[a])].impedance();
                    ++a;
                    ++b;
                } else if (pi[a] < pj[b]) {
                    ++a;
                } else {
                    ++b;
                }
            }
            z(i, j) = sum;
            z(j, i) = sum;
        }
    }
    return z;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>
build_equivalent_matrices(const Eigen::MatrixXcd& z_net, const Eigen::VectorXcd& y_diag) {
    const int m = static_cast<int>(z_net.rows());
    Eigen::MatrixXcd system = Eigen::MatrixXcd::Identity(m, m);
    system.noalias() += z_net * y_diag.asDiagonal();

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
    // column-by-column solves instead of an explicit inverse
    Eigen::MatrixXcd h = lu.solve(Eigen::MatrixXcd::Identity(m, m));
    Eigen::MatrixXcd z_eq = lu.solve(z_net);

    const double residual = (system * h - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || residual > 1e-10) {
        const double norm = system.cwiseAbs().rowwise().sum().maxCoeff();
        const double inv_norm = h.cwiseAbs().rowwise().sum().maxCoeff();
        throw ModelError("I + Z_net*Y_L is numerically singular (inversion residual " +
                         std::to_string(residual) + ", condition estimate " +
                         std::to_string(norm * inv_norm) + ")");
    }
    return {std::move(h), std::move(z_eq)};
}

SequenceNetworkModel build_network_model(const Scenario& scenario) {
    scenario.validate();
    SequenceNetworkModel model;
    const auto paths = build_path_sets(scenario);
    model.z_net = build_impedance_matrix(scenario, paths);
    model.y_load = Eigen::VectorXcd::Zero(scenario.bus_count);
    for (const auto& [bus, y] : scenario.loads) model.y_load(bus - 1) += y;
    std::tie(model.h, model.z_eq) = build_equivalent_matrices(model.z_net, model.y_load);
    return model;
}

} // namespace vucoord
