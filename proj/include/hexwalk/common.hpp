// Copyright 2026 The hexwalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <complex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hexwalk {

using cd = std::complex<double>;
using Mat3 = Eigen::Matrix3cd;
using Mat6 = Eigen::Matrix<cd, 6, 6>;
using VecX = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cd>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error taxonomy. CLI maps these onto exit codes: usage/contract -> 2,
// numerical -> 3, I/O -> 4.
struct contract_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct size_error : contract_error {
  using contract_error::contract_error;
};
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double max_abs(const Mat3& m) {
  return m.cwiseAbs().maxCoeff();
}

inline bool is_unitary(const Mat3& m, double tol = 1e-12) {
  return max_abs((m.adjoint() * m - Mat3::Identity()).eval()) <= tol;
}

inline void require_unitary(const Mat3& m, double tol, const char* what) {
  if (!is_unitary(m, tol))
    throw contract_error(std::string(what) + ": matrix is not unitary");
}

// Chunked deterministic parallel map over [0, n). Each index writes its own
// result slot, so the reduction order never depends on thread scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::atomic<std::size_t> next{0};
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hexwalk
