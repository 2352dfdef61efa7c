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
#include "rsgrape/linalg.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "rsgrape/errors.hpp"

namespace rsgrape {

namespace {
constexpr Complex kImag{0.0, 1.0};
}

ComplexMatrix pauli_matrix(PauliAxis axis) {
  ComplexMatrix m(2, 2);
  switch (axis) {
    case PauliAxis::X:
      m << 0, 1, 1, 0;
      break;
    case PauliAxis::Y:
      m << 0, -kImag, kImag, 0;
      break;
    case PauliAxis::Z:
      m << 1, 0, 0, -1;
      break;
  }
  return m;
}

ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ComplexMatrix pauli_string(
    const std::vector<std::pair<int, PauliAxis>> &factors, int n_qubits) {
  if (n_qubits < 1) throw std::invalid_argument("pauli_string: n_qubits < 1");
  std::set<int> seen;
  for (const auto &[qubit, axis] : factors) {
    (void)axis;
    if (qubit < 1 || qubit > n_qubits) {
      std::ostringstream msg;
      msg << "pauli_string: qubit index " << qubit << " out of range [1, "
          << n_qubits << "]";
      throw std::invalid_argument(msg.str());
    }
    if (!seen.insert(qubit).second) {
      std::ostringstream msg;
      msg << "pauli_string: duplicate qubit index " << qubit;
      throw std::invalid_argument(msg.str());
    }
  }
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int q = 1; q <= n_qubits; ++q) {
    ComplexMatrix factor = ComplexMatrix::Identity(2, 2);
    for (const auto &[qubit, axis] : factors)
      if (qubit == q) factor = pauli_matrix(axis);
    out = kron(out, factor);
  }
  return out;
}

double max_abs(const ComplexMatrix &m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double frobenius_norm(const ComplexMatrix &m) { return m.norm(); }

bool is_hermitian(const ComplexMatrix &m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = max_abs(m);
  return max_abs(m - m.adjoint()) <= rel_tol * std::max(scale, 1e-300);
}

bool is_unitary(const ComplexMatrix &m, double tol) {
  if (m.rows() != m.cols()) return false;
  const ComplexMatrix gram = m.adjoint() * m;
  return (gram - ComplexMatrix::Identity(m.rows(), m.cols())).norm() <= tol;
}

SpectralCache spectral_decompose(const ComplexMatrix &hermitian) {
  if (hermitian.rows() != hermitian.cols())
    throw std::invalid_argument("spectral_decompose: matrix not square");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigendecomposition failed to converge (dim=" << hermitian.rows()
        << ", max|H|=" << max_abs(hermitian)
        << ", ||H||_F=" << hermitian.norm() << ")";
    throw NumericalError(msg.str());
  }
  // Eigen already returns eigenvalues in ascending order.
  return SpectralCache{solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix expm_from_spectrum(const SpectralCache &cache, double dt) {
  const Eigen::Index n = cache.dim();
  ComplexVector phases(n);
  for (Eigen::Index j = 0; j < n; ++j)
    phases(j) = std::exp(-kImag * cache.eigenvalues(j) * dt);
  return (cache.eigenvectors * phases.asDiagonal()) *
         cache.eigenvectors.adjoint();
}

ComplexMatrix expm_hermitian_generator(const ComplexMatrix &h, double dt) {
  if (!std::isfinite(dt))
    throw std::invalid_argument("expm_hermitian_generator: dt not finite");
  if (!is_hermitian(h))
    throw std::invalid_argument(
        "expm_hermitian_generator: matrix not Hermitian within tolerance");
  return expm_from_spectrum(spectral_decompose(h), dt);
}

ComplexMatrix phase_divided_differences(const RealVector &eigenvalues,
                                        double dt) {
  const Eigen::Index n = eigenvalues.size();
  ComplexVector f(n);
  for (Eigen::Index j = 0; j < n; ++j)
    f(j) = std::exp(-kImag * eigenvalues(j) * dt);
  ComplexMatrix table(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double threshold = 1e-9 * std::max(1.0, std::abs(eigenvalues(j)));
    for (Eigen::Index k = 0; k < n; ++k) {
      const double gap = eigenvalues(j) - eigenvalues(k);
      table(j, k) = std::abs(gap) <= threshold
                        ? -kImag * dt * f(j)
                        : (f(j) - f(k)) / gap;
    }
  }
  return table;
}

ComplexMatrix expm_directional_derivative(const SpectralCache &cache,
                                          const ComplexMatrix &a, double dt) {
  if (a.rows() != cache.dim() || a.cols() != cache.dim())
    throw std::invalid_argument(
        "expm_directional_derivative: dimension mismatch");
  const ComplexMatrix table = phase_divided_differences(cache.eigenvalues, dt);
  const ComplexMatrix w =
      cache.eigenvectors.adjoint() * a * cache.eigenvectors;
  return (cache.eigenvectors * table.cwiseProduct(w)) *
         cache.eigenvectors.adjoint();
}

ComplexMatrix expm_directional_derivative(const ComplexMatrix &h,
                                          const ComplexMatrix &a, double dt) {
  if (h.rows() != a.rows() || h.cols() != a.cols())
    throw std::invalid_argument(
        "expm_directional_derivative: dimension mismatch");
  return expm_directional_derivative(spectral_decompose(h), a, dt);
}

}  // namespace rsgrape
