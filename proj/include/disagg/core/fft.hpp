#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "disagg/core/error.hpp"

namespace disagg::fft {

namespace detail {
// The FFTW planner is not reentrant; execution of an existing plan is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
}  // namespace detail

enum class Direction { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

/// Complex-to-complex transform of fixed size. Unnormalized in both directions:
/// forward computes sum_j x_j exp(-2 pi i jk/n).
/// One plan may be executed concurrently from several threads on distinct buffers.
class Plan {
 public:
  Plan(std::size_t n, Direction dir) : n_(n) {
    if (n == 0) throw DomainError("fft::Plan: size must be positive");
    std::vector<std::complex<double>> in(n), out(n);
    std::lock_guard lock(detail::planner_mutex());
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()),
                                   static_cast<int>(dir), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw Error(ErrorCode::conditioning, "fft::Plan: FFTW planning failed");
    plan_.reset(p);
  }

  std::size_t size() const noexcept { return n_; }

  void execute(const std::vector<std::complex<double>>& in,
               std::vector<std::complex<double>>& out) const {
    if (in.size() != n_) throw DomainError("fft::Plan: input size mismatch");
    out.resize(n_);
    // FFTW does not modify the input of an out-of-place complex transform.
    fftw_execute_dft(plan_.get(),
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

  std::vector<std::complex<double>> operator()(const std::vector<std::complex<double>>& in) const {
    std::vector<std::complex<double>> out(n_);
    execute(in, out);
    return out;
  }

 private:
  std::size_t n_;
  std::unique_ptr<fftw_plan_s, detail::PlanDeleter> plan_;
};

inline std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& in) {
  return Plan(in.size(), Direction::forward)(in);
}

inline std::vector<std::complex<double>> backward(const std::vector<std::complex<double>>& in) {
  return Plan(in.size(), Direction::backward)(in);
}

}  // namespace disagg::fft
