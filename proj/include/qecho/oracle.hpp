// oracle.hpp — brute-force cross-checks used only by the test suite. The
// eigenvalue path here (inertia bisection + inverse iteration) shares no
// code with the production eigensolver.

#pragma once

#include "qecho/dynamics.hpp"

namespace qecho::oracle {

struct VerifyReport {
    bool pass{false};
    double max_deviation{0.0};
};

// Recomputes the eigenstate LDOS of `ref` at `dx` from scratch (Sylvester
// inertia bisection for eigenvalues, inverse iteration for vectors) and
// compares offsets and weights against the spectral module within `tol`.
// n <= 12.
VerifyReport verify_ldos_small(const model::ParametricModel& m, double dx,
                               std::size_t ref, double tol = 1e-8);

// Propagates both exponentials of the fidelity amplitude by matrix
// exponential and compares against the spectral-representation evolution
// over `grid` within `tol`. n <= 64.
VerifyReport verify_fidelity_small(const model::ParametricModel& m, double dx,
                                   const Eigen::VectorXcd& preparation,
                                   const std::vector<double>& grid,
                                   double tol = 1e-8);

// Eigenvalues of a dense symmetric matrix by Gershgorin-bracketed inertia
// bisection; ascending. Exposed for direct unit testing. n <= 12.
std::vector<double> bisection_eigenvalues(const Eigen::MatrixXd& a, double tol = 1e-13);

}  // namespace qecho::oracle
