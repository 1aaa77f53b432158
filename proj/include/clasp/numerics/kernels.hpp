#pragma once

// Compute kernels behind the autodiff operators.
//
// Two implementations share one signature set:
//   serial::   direct loops, kept as the reference the tests compare against;
//   parallel:: blocked GEMM + im2col convolution with OpenMP over rows/samples.
//
// Every parallel loop partitions the OUTPUT, and each output element is
// reduced in a fixed order by one thread, so results do not depend on the
// thread count.

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <memory>
#include <vector>

namespace clasp::numerics::kernels {

struct Conv1dGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t length = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  // floor((L + 2*pad - k) / stride) + 1; zero when the kernel does not fit.
  std::size_t out_length() const {
    if (length + 2 * padding < kernel) return 0;
    return (length + 2 * padding - kernel) / stride + 1;
  }
  std::size_t patch() const { return in_channels * kernel; }
};

namespace serial {

// C[M,N] = op(A) * op(B), op(A) is MxK. A is stored [K,M] when trans_a,
// B is stored [N,K] when trans_b. Overwrites C.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) {
        const T av = trans_a ? a[p * m + i] : a[i * k + p];
        const T bv = trans_b ? b[j * k + p] : b[p * n + j];
        acc += av * bv;
      }
      c[i * n + j] = acc;
    }
  }
}

// x [N,Cin,L], w [Cout,Cin,K], bias [Cout] -> y [N,Cout,Lout]
template <typename T>
void conv1d_forward(const Conv1dGeometry& g, const T* x, const T* w, const T* bias, T* y) {
  const std::size_t lout = g.out_length();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      for (std::size_t o = 0; o < lout; ++o) {
        T acc = bias[co];
        for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
          for (std::size_t kk = 0; kk < g.kernel; ++kk) {
            const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * g.stride + kk) -
                                       static_cast<std::ptrdiff_t>(g.padding);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(g.length)) continue;
            acc += w[(co * g.in_channels + ci) * g.kernel + kk] *
                   x[(n * g.in_channels + ci) * g.length + static_cast<std::size_t>(pos)];
          }
        }
        y[(n * g.out_channels + co) * lout + o] = acc;
      }
    }
  }
}

// Overwrites dx, dw, dbias.
template <typename T>
void conv1d_backward(const Conv1dGeometry& g, const T* x, const T* w, const T* dy, T* dx, T* dw,
                     T* dbias) {
  const std::size_t lout = g.out_length();
  std::fill(dx, dx + g.batch * g.in_channels * g.length, T{0});
  std::fill(dw, dw + g.out_channels * g.in_channels * g.kernel, T{0});
  std::fill(dbias, dbias + g.out_channels, T{0});
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      for (std::size_t o = 0; o < lout; ++o) {
        const T grad = dy[(n * g.out_channels + co) * lout + o];
        dbias[co] += grad;
        for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
          for (std::size_t kk = 0; kk < g.kernel; ++kk) {
            const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * g.stride + kk) -
                                       static_cast<std::ptrdiff_t>(g.padding);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(g.length)) continue;
            const std::size_t xi = (n * g.in_channels + ci) * g.length + static_cast<std::size_t>(pos);
            const std::size_t wi = (co * g.in_channels + ci) * g.kernel + kk;
            dw[wi] += grad * x[xi];
            dx[xi] += grad * w[wi];
          }
        }
      }
    }
  }
}

// scores[i] = dot(rows[i, :], query)
template <typename T>
void row_dots(std::size_t rows, std::size_t dim, const T* matrix, const T* query, T* scores) {
  for (std::size_t i = 0; i < rows; ++i) {
    T acc{0};
    for (std::size_t j = 0; j < dim; ++j) acc += matrix[i * dim + j] * query[j];
    scores[i] = acc;
  }
}

}  // namespace serial

namespace parallel {

namespace detail {

// Scratch storage that skips value-initialisation.
template <typename T>
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(std::size_t n) : data_(n ? new T[n] : nullptr), size_(n) {}
  T* data() { return data_.get(); }
  const T* data() const { return data_.get(); }
  std::size_t size() const { return size_; }

 private:
  std::unique_ptr<T[]> data_;
  std::size_t size_ = 0;
};

// Register tile: kTileRows rows x two SIMD vectors of columns. B is packed
// one column panel at a time so the micro-kernel streams it contiguously.
template <typename T>
struct SimdOf;
template <>
struct SimdOf<float> {
  typedef float type __attribute__((vector_size(64)));
};
template <>
struct SimdOf<double> {
  typedef double type __attribute__((vector_size(64)));
};

template <typename T>
struct Tile {
  using Vec = typename SimdOf<T>::type;
  static constexpr std::size_t kLanes = 64 / sizeof(T);
  static constexpr std::size_t kCols = 2 * kLanes;
  static constexpr std::size_t kRows = 6;
};

template <typename T, std::size_t Rows>
inline void micro_kernel(std::size_t k, const T* __restrict a, std::size_t lda,
                         const T* __restrict panel, T* __restrict out, std::size_t ldo,
                         std::size_t cols) {
  using Vec = typename Tile<T>::Vec;
  constexpr std::size_t lanes = Tile<T>::kLanes;
  constexpr std::size_t width = Tile<T>::kCols;
  Vec acc[Rows][2];
  for (std::size_t r = 0; r < Rows; ++r) {
    acc[r][0] = Vec{};
    acc[r][1] = Vec{};
  }
  for (std::size_t p = 0; p < k; ++p) {
    Vec b0;
    Vec b1;
    std::memcpy(&b0, panel + p * width, sizeof(Vec));
    std::memcpy(&b1, panel + p * width + lanes, sizeof(Vec));
    for (std::size_t r = 0; r < Rows; ++r) {
      const T av = a[r * lda + p];
      acc[r][0] += av * b0;
      acc[r][1] += av * b1;
    }
  }
  if (cols == width) {
    for (std::size_t r = 0; r < Rows; ++r) {
      std::memcpy(out + r * ldo, &acc[r][0], sizeof(Vec));
      std::memcpy(out + r * ldo + lanes, &acc[r][1], sizeof(Vec));
    }
  } else {
    alignas(64) T tmp[width];
    for (std::size_t r = 0; r < Rows; ++r) {
      std::memcpy(tmp, &acc[r][0], sizeof(Vec));
      std::memcpy(tmp + lanes, &acc[r][1], sizeof(Vec));
      std::memcpy(out + r * ldo, tmp, cols * sizeof(T));
    }
  }
}

template <typename T>
inline void micro_kernel_rows(std::size_t rows, std::size_t k, const T* a, std::size_t lda,
                              const T* panel, T* out, std::size_t ldo, std::size_t cols) {
  switch (rows) {
    case 1: micro_kernel<T, 1>(k, a, lda, panel, out, ldo, cols); break;
    case 2: micro_kernel<T, 2>(k, a, lda, panel, out, ldo, cols); break;
    case 3: micro_kernel<T, 3>(k, a, lda, panel, out, ldo, cols); break;
    case 4: micro_kernel<T, 4>(k, a, lda, panel, out, ldo, cols); break;
    case 5: micro_kernel<T, 5>(k, a, lda, panel, out, ldo, cols); break;
    default: micro_kernel<T, 6>(k, a, lda, panel, out, ldo, cols); break;
  }
}

// C[M,N] = A[M,K] * B[K,N], row-major, overwrites C.
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* __restrict a,
             const T* __restrict b, T* __restrict c) {
  constexpr std::size_t width = Tile<T>::kCols;
  constexpr std::size_t tile_rows = Tile<T>::kRows;
  if (k == 0) {
    std::fill(c, c + m * n, T{0});
    return;
  }
  const auto panels = static_cast<std::ptrdiff_t>((n + width - 1) / width);
#pragma omp parallel
  {
    std::vector<T> panel(k * width);
#pragma omp for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < panels; ++pi) {
      const std::size_t j0 = static_cast<std::size_t>(pi) * width;
      const std::size_t cols = std::min(width, n - j0);
      for (std::size_t p = 0; p < k; ++p) {
        T* dst = panel.data() + p * width;
        const T* src = b + p * n + j0;
        std::size_t j = 0;
        for (; j < cols; ++j) dst[j] = src[j];
        for (; j < width; ++j) dst[j] = T{0};
      }
      for (std::size_t i0 = 0; i0 < m; i0 += tile_rows) {
        const std::size_t rows = std::min(tile_rows, m - i0);
        micro_kernel_rows(rows, k, a + i0 * k, k, panel.data(), c + i0 * n + j0, n, cols);
      }
    }
  }
}

// out[cols, rows] = in[rows, cols]^T
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out) {
  constexpr std::size_t kTile = 32;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cb = 0; cb < static_cast<std::ptrdiff_t>(cols); cb += kTile) {
    for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
      const std::size_t c0 = static_cast<std::size_t>(cb);
      const std::size_t r1 = std::min(rows, r0 + kTile);
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t j = c0; j < c1; ++j) {
        for (std::size_t i = r0; i < r1; ++i) out[j * rows + i] = in[i * cols + j];
      }
    }
  }
}

}  // namespace detail

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c) {
  detail::Buffer<T> a_buf;
  detail::Buffer<T> b_buf;
  if (trans_a) {
    a_buf = detail::Buffer<T>(m * k);
    detail::transpose(k, m, a, a_buf.data());
    a = a_buf.data();
  }
  if (trans_b) {
    b_buf = detail::Buffer<T>(k * n);
    detail::transpose(n, k, b, b_buf.data());
    b = b_buf.data();
  }
  detail::gemm_nn(m, n, k, a, b, c);
}

namespace detail {

// cols [Cin*K, N*Lout]
template <typename T>
void im2col(const Conv1dGeometry& g, const T* x, T* cols) {
  const std::size_t lout = g.out_length();
  const std::size_t width = g.batch * lout;
  const auto patch = static_cast<std::ptrdiff_t>(g.patch());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t row = 0; row < patch; ++row) {
    const std::size_t ci = static_cast<std::size_t>(row) / g.kernel;
    const std::size_t kk = static_cast<std::size_t>(row) % g.kernel;
    // valid o satisfy padding <= o*stride + kk < length + padding
    const std::size_t lo =
        kk >= g.padding ? 0 : (g.padding - kk + g.stride - 1) / g.stride;
    std::size_t hi = 0;
    if (g.length + g.padding > kk) {
      hi = std::min(lout, (g.length + g.padding - kk - 1) / g.stride + 1);
    }
    T* dst = cols + static_cast<std::size_t>(row) * width;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const T* src = x + (n * g.in_channels + ci) * g.length;
      T* out = dst + n * lout;
      for (std::size_t o = 0; o < std::min(lo, lout); ++o) out[o] = T{0};
      for (std::size_t o = lo; o < hi; ++o) out[o] = src[o * g.stride + kk - g.padding];
      for (std::size_t o = std::max(hi, lo); o < lout; ++o) out[o] = T{0};
    }
  }
}

// dx[n, ci, :] accumulated from dcols; one (n, ci) row per iteration.
template <typename T>
void col2im(const Conv1dGeometry& g, const T* dcols, T* dx) {
  const std::size_t lout = g.out_length();
  const std::size_t width = g.batch * lout;
  const auto rows = static_cast<std::ptrdiff_t>(g.batch * g.in_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t n = static_cast<std::size_t>(r) / g.in_channels;
    const std::size_t ci = static_cast<std::size_t>(r) % g.in_channels;
    T* dst = dx + static_cast<std::size_t>(r) * g.length;
    std::fill(dst, dst + g.length, T{0});
    for (std::size_t kk = 0; kk < g.kernel; ++kk) {
      const std::size_t lo =
          kk >= g.padding ? 0 : (g.padding - kk + g.stride - 1) / g.stride;
      std::size_t hi = 0;
      if (g.length + g.padding > kk) {
        hi = std::min(lout, (g.length + g.padding - kk - 1) / g.stride + 1);
      }
      const T* src = dcols + (ci * g.kernel + kk) * width + n * lout;
      for (std::size_t o = lo; o < hi; ++o) dst[o * g.stride + kk - g.padding] += src[o];
    }
  }
}

}  // namespace detail

// Holds the im2col matrix of the last forward call so backward can reuse it.
template <typename T>
struct Conv1dWorkspace {
  detail::Buffer<T> cols;
};

template <typename T>
void conv1d_forward(const Conv1dGeometry& g, const T* x, const T* w, const T* bias, T* y,
                    Conv1dWorkspace<T>* workspace = nullptr) {
  const std::size_t lout = g.out_length();
  const std::size_t width = g.batch * lout;
  detail::Buffer<T> cols(g.patch() * width);
  detail::im2col(g, x, cols.data());
  detail::Buffer<T> out(g.out_channels * width);
  detail::gemm_nn(g.out_channels, width, g.patch(), w, cols.data(), out.data());
  const auto planes = static_cast<std::ptrdiff_t>(g.batch * g.out_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < planes; ++p) {
    const std::size_t n = static_cast<std::size_t>(p) / g.out_channels;
    const std::size_t co = static_cast<std::size_t>(p) % g.out_channels;
    const T* src = out.data() + co * width + n * lout;
    T* dst = y + static_cast<std::size_t>(p) * lout;
    const T b = bias[co];
    for (std::size_t o = 0; o < lout; ++o) dst[o] = src[o] + b;
  }
  if (workspace != nullptr) workspace->cols = std::move(cols);
}

// Overwrites dx, dw, dbias. Reuses workspace->cols when it holds the
// im2col matrix of the same x.
template <typename T>
void conv1d_backward(const Conv1dGeometry& g, const T* x, const T* w, const T* dy, T* dx, T* dw,
                     T* dbias, Conv1dWorkspace<T>* workspace = nullptr) {
  const std::size_t lout = g.out_length();
  const std::size_t width = g.batch * lout;
  // dy [N,Cout,Lout] -> dout [Cout, N*Lout]
  detail::Buffer<T> dout(g.out_channels * width);
  const auto co_count = static_cast<std::ptrdiff_t>(g.out_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < co_count; ++co) {
    T sum{0};
    for (std::size_t n = 0; n < g.batch; ++n) {
      const T* src = dy + (n * g.out_channels + static_cast<std::size_t>(co)) * lout;
      T* dst = dout.data() + static_cast<std::size_t>(co) * width + n * lout;
      for (std::size_t o = 0; o < lout; ++o) {
        dst[o] = src[o];
        sum += src[o];
      }
    }
    dbias[co] = sum;
  }

  detail::Buffer<T> cols;
  if (workspace != nullptr && workspace->cols.size() == g.patch() * width) {
    cols = std::move(workspace->cols);
  } else {
    cols = detail::Buffer<T>(g.patch() * width);
    detail::im2col(g, x, cols.data());
  }
  // dw [Cout, Cin*K] = dout [Cout, NL] * cols^T [NL, Cin*K]
  gemm(false, true, g.out_channels, g.patch(), width, dout.data(), cols.data(), dw);
  // dcols [Cin*K, NL] = w^T [Cin*K, Cout] * dout [Cout, NL]
  gemm(true, false, g.patch(), width, g.out_channels, w, dout.data(), cols.data());
  detail::col2im(g, cols.data(), dx);
}

template <typename T>
void row_dots(std::size_t rows, std::size_t dim, const T* matrix, const T* query, T* scores) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
    const T* row = matrix + static_cast<std::size_t>(i) * dim;
    T acc{0};
    for (std::size_t j = 0; j < dim; ++j) acc += row[j] * query[j];
    scores[i] = acc;
  }
}

}  // namespace parallel

}  // namespace clasp::numerics::kernels
