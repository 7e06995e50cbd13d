#include "stekloff/sparse_lu.hpp"

#include <array>
#include <vector>

#include <fmt/format.h>
#include <suitesparse/umfpack.h>

namespace stekloff {

struct SparseLu::Impl {
  Index n = 0;
  bool real = true;
  std::vector<int> ap, ai;
  std::vector<double> ax;   // real values, or interleaved (re, im) pairs
  void* numeric = nullptr;
  std::array<double, UMFPACK_CONTROL> control{};
  std::array<double, UMFPACK_INFO> info{};

  ~Impl() {
    if (!numeric) return;
    if (real) umfpack_di_free_numeric(&numeric);
    else umfpack_zi_free_numeric(&numeric);
  }
};

namespace {

void check_status(int status, const char* stage) {
  if (status == UMFPACK_OK) return;
  if (status == UMFPACK_WARNING_singular_matrix)
    throw FactorizationError(fmt::format("{}: matrix is singular", stage));
  throw FactorizationError(fmt::format("{}: UMFPACK status {}", stage, status));
}

}  // namespace

SparseLu::SparseLu(const SparseMatrix& input) : impl_(std::make_unique<Impl>()) {
  if (input.rows() != input.cols()) throw FactorizationError("matrix is not square");
  SparseMatrix m = input;
  m.makeCompressed();
  auto& d = *impl_;
  d.n = static_cast<Index>(m.rows());
  d.real = true;
  for (Index k = 0; k < m.nonZeros(); ++k)
    if (m.valuePtr()[k].imag() != 0.0) {
      d.real = false;
      break;
    }

  d.ap.assign(m.outerIndexPtr(), m.outerIndexPtr() + m.outerSize() + 1);
  d.ai.assign(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
  if (d.real) {
    d.ax.resize(static_cast<std::size_t>(m.nonZeros()));
    for (Index k = 0; k < m.nonZeros(); ++k) d.ax[static_cast<std::size_t>(k)] = m.valuePtr()[k].real();
  } else {
    d.ax.resize(2 * static_cast<std::size_t>(m.nonZeros()));
    for (Index k = 0; k < m.nonZeros(); ++k) {
      d.ax[2 * static_cast<std::size_t>(k)] = m.valuePtr()[k].real();
      d.ax[2 * static_cast<std::size_t>(k) + 1] = m.valuePtr()[k].imag();
    }
  }

  void* symbolic = nullptr;
  if (d.real) {
    umfpack_di_defaults(d.control.data());
    d.control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC;
    d.control[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
    int status = umfpack_di_symbolic(d.n, d.n, d.ap.data(), d.ai.data(), d.ax.data(), &symbolic,
                                     d.control.data(), d.info.data());
    check_status(status, "symbolic factorization");
    status = umfpack_di_numeric(d.ap.data(), d.ai.data(), d.ax.data(), symbolic, &d.numeric, d.control.data(),
                                d.info.data());
    umfpack_di_free_symbolic(&symbolic);
    check_status(status, "numeric factorization");
  } else {
    umfpack_zi_defaults(d.control.data());
    d.control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC;
    d.control[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
    int status = umfpack_zi_symbolic(d.n, d.n, d.ap.data(), d.ai.data(), d.ax.data(), nullptr, &symbolic,
                                     d.control.data(), d.info.data());
    check_status(status, "symbolic factorization");
    status = umfpack_zi_numeric(d.ap.data(), d.ai.data(), d.ax.data(), nullptr, symbolic, &d.numeric,
                                d.control.data(), d.info.data());
    umfpack_zi_free_symbolic(&symbolic);
    check_status(status, "numeric factorization");
  }
}

SparseLu::~SparseLu() = default;
SparseLu::SparseLu(SparseLu&&) noexcept = default;
SparseLu& SparseLu::operator=(SparseLu&&) noexcept = default;

Index SparseLu::size() const { return impl_->n; }
bool SparseLu::is_real() const { return impl_->real; }
double SparseLu::rcond() const { return impl_->info[UMFPACK_RCOND]; }
long SparseLu::factor_nonzeros() const {
  return static_cast<long>(impl_->info[UMFPACK_LNZ] + impl_->info[UMFPACK_UNZ]);
}

Eigen::VectorXd SparseLu::solve(const Eigen::VectorXd& b) const {
  const auto& d = *impl_;
  if (b.size() != d.n) throw FactorizationError("right-hand side has the wrong length");
  if (!d.real) return solve(CVector(b.cast<Complex>())).real();
  Eigen::VectorXd x(d.n);
  std::array<double, UMFPACK_INFO> info{};
  const int status = umfpack_di_solve(UMFPACK_A, d.ap.data(), d.ai.data(), d.ax.data(), x.data(), b.data(),
                                      d.numeric, d.control.data(), info.data());
  check_status(status, "solve");
  return x;
}

CVector SparseLu::solve(const CVector& b) const {
  const auto& d = *impl_;
  if (b.size() != d.n) throw FactorizationError("right-hand side has the wrong length");
  if (d.real) {
    const Eigen::VectorXd re = solve(Eigen::VectorXd(b.real()));
    CVector x(d.n);
    x.real() = re;
    if (b.imag().isZero(0.0)) x.imag().setZero();
    else x.imag() = solve(Eigen::VectorXd(b.imag()));
    return x;
  }
  CVector x(d.n);
  std::array<double, UMFPACK_INFO> info{};
  const int status = umfpack_zi_solve(UMFPACK_A, d.ap.data(), d.ai.data(), d.ax.data(), nullptr,
                                      reinterpret_cast<double*>(x.data()), nullptr,
                                      reinterpret_cast<const double*>(b.data()), nullptr, d.numeric,
                                      d.control.data(), info.data());
  check_status(status, "solve");
  return x;
}

}  // namespace stekloff
