/* Copyright 2026 The rsgrape Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rsgrape {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

enum class PauliAxis { X, Y, Z };

/// 2x2 Pauli matrix for one axis.
ComplexMatrix pauli_matrix(PauliAxis axis);

ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b);

/// Kronecker product placing the named Pauli at each named qubit and the
/// identity elsewhere. Qubit indices are 1-based and qubit 1 is the leftmost
/// tensor factor.
ComplexMatrix pauli_string(
    const std::vector<std::pair<int, PauliAxis>> &factors, int n_qubits);

double max_abs(const ComplexMatrix &m);
double frobenius_norm(const ComplexMatrix &m);

/// max|A - A^dag| <= rel_tol * max|A|
bool is_hermitian(const ComplexMatrix &m, double rel_tol = 1e-12);

/// ||U^dag U - I||_F <= tol
bool is_unitary(const ComplexMatrix &m, double tol = 1e-10);

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending so
/// repeated decompositions of the same matrix are reproducible.
struct SpectralCache {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }
};

SpectralCache spectral_decompose(const ComplexMatrix &hermitian);

/// exp(-i * H * dt) from a precomputed decomposition of H.
ComplexMatrix expm_from_spectrum(const SpectralCache &cache, double dt);

/// exp(-i * H * dt) for Hermitian H, computed spectrally so the result is
/// unitary to rounding and free of step-size truncation error.
ComplexMatrix expm_hermitian_generator(const ComplexMatrix &h, double dt);

/// Divided-difference table of f(x) = exp(-i*x*dt) over an eigenvalue list:
/// entry (j,k) is (f(l_j)-f(l_k))/(l_j-l_k), switching to the confluent limit
/// -i*dt*f(l_j) when |l_j-l_k| <= 1e-9*max(1,|l_j|) to avoid cancellation.
ComplexMatrix phase_divided_differences(const RealVector &eigenvalues,
                                        double dt);

/// Exact directional (Daleckii-Krein) derivative of exp(-i*(H+sA)*dt) at s=0.
ComplexMatrix expm_directional_derivative(const SpectralCache &cache,
                                          const ComplexMatrix &a, double dt);
ComplexMatrix expm_directional_derivative(const ComplexMatrix &h,
                                          const ComplexMatrix &a, double dt);

}  // namespace rsgrape
