#pragma once

#include <cstddef>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

// Dense kernels behind the tensor and layer operations. Everything here
// accumulates each output element over the reduction index in ascending
// order, so results are reproducible bit-for-bit from run to run; the only
// freedom the kernels take is vectorizing across *independent* outputs.

namespace scnn {
namespace detail {

#if defined(__AVX512F__)

// 2 x 32 register tile: c rows += a rows * B. The workhorse; 16 independent
// FMA chains keep the single FMA pipe busy.
inline void tile_2x32(const double* a0, const double* a1, const double* b,
                      std::size_t ldb, double* c0, double* c1, std::size_t kk) {
  __m512d s00 = _mm512_setzero_pd(), s01 = s00, s02 = s00, s03 = s00;
  __m512d s10 = s00, s11 = s00, s12 = s00, s13 = s00;
  for (std::size_t p = 0; p < kk; ++p, b += ldb) {
    const __m512d b0 = _mm512_loadu_pd(b);
    const __m512d b1 = _mm512_loadu_pd(b + 8);
    const __m512d b2 = _mm512_loadu_pd(b + 16);
    const __m512d b3 = _mm512_loadu_pd(b + 24);
    const __m512d v0 = _mm512_set1_pd(a0[p]);
    s00 = _mm512_fmadd_pd(v0, b0, s00);
    s01 = _mm512_fmadd_pd(v0, b1, s01);
    s02 = _mm512_fmadd_pd(v0, b2, s02);
    s03 = _mm512_fmadd_pd(v0, b3, s03);
    const __m512d v1 = _mm512_set1_pd(a1[p]);
    s10 = _mm512_fmadd_pd(v1, b0, s10);
    s11 = _mm512_fmadd_pd(v1, b1, s11);
    s12 = _mm512_fmadd_pd(v1, b2, s12);
    s13 = _mm512_fmadd_pd(v1, b3, s13);
  }
  _mm512_storeu_pd(c0 + 0, _mm512_add_pd(_mm512_loadu_pd(c0 + 0), s00));
  _mm512_storeu_pd(c0 + 8, _mm512_add_pd(_mm512_loadu_pd(c0 + 8), s01));
  _mm512_storeu_pd(c0 + 16, _mm512_add_pd(_mm512_loadu_pd(c0 + 16), s02));
  _mm512_storeu_pd(c0 + 24, _mm512_add_pd(_mm512_loadu_pd(c0 + 24), s03));
  _mm512_storeu_pd(c1 + 0, _mm512_add_pd(_mm512_loadu_pd(c1 + 0), s10));
  _mm512_storeu_pd(c1 + 8, _mm512_add_pd(_mm512_loadu_pd(c1 + 8), s11));
  _mm512_storeu_pd(c1 + 16, _mm512_add_pd(_mm512_loadu_pd(c1 + 16), s12));
  _mm512_storeu_pd(c1 + 24, _mm512_add_pd(_mm512_loadu_pd(c1 + 24), s13));
}

inline void tile_1x32(const double* a, const double* b, std::size_t ldb,
                      double* c, std::size_t kk) {
  __m512d s0 = _mm512_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
  for (std::size_t p = 0; p < kk; ++p, b += ldb) {
    const __m512d v = _mm512_set1_pd(a[p]);
    s0 = _mm512_fmadd_pd(v, _mm512_loadu_pd(b), s0);
    s1 = _mm512_fmadd_pd(v, _mm512_loadu_pd(b + 8), s1);
    s2 = _mm512_fmadd_pd(v, _mm512_loadu_pd(b + 16), s2);
    s3 = _mm512_fmadd_pd(v, _mm512_loadu_pd(b + 24), s3);
  }
  _mm512_storeu_pd(c + 0, _mm512_add_pd(_mm512_loadu_pd(c + 0), s0));
  _mm512_storeu_pd(c + 8, _mm512_add_pd(_mm512_loadu_pd(c + 8), s1));
  _mm512_storeu_pd(c + 16, _mm512_add_pd(_mm512_loadu_pd(c + 16), s2));
  _mm512_storeu_pd(c + 24, _mm512_add_pd(_mm512_loadu_pd(c + 24), s3));
}

inline void tile_4x16(const double* a, std::size_t lda, const double* b,
                      std::size_t ldb, double* c, std::size_t ldc,
                      std::size_t kk) {
  __m512d s00 = _mm512_setzero_pd(), s01 = s00;
  __m512d s10 = s00, s11 = s00, s20 = s00, s21 = s00, s30 = s00, s31 = s00;
  for (std::size_t p = 0; p < kk; ++p, b += ldb) {
    const __m512d b0 = _mm512_loadu_pd(b);
    const __m512d b1 = _mm512_loadu_pd(b + 8);
    __m512d v = _mm512_set1_pd(a[p]);
    s00 = _mm512_fmadd_pd(v, b0, s00);
    s01 = _mm512_fmadd_pd(v, b1, s01);
    v = _mm512_set1_pd(a[lda + p]);
    s10 = _mm512_fmadd_pd(v, b0, s10);
    s11 = _mm512_fmadd_pd(v, b1, s11);
    v = _mm512_set1_pd(a[2 * lda + p]);
    s20 = _mm512_fmadd_pd(v, b0, s20);
    s21 = _mm512_fmadd_pd(v, b1, s21);
    v = _mm512_set1_pd(a[3 * lda + p]);
    s30 = _mm512_fmadd_pd(v, b0, s30);
    s31 = _mm512_fmadd_pd(v, b1, s31);
  }
  _mm512_storeu_pd(c, _mm512_add_pd(_mm512_loadu_pd(c), s00));
  _mm512_storeu_pd(c + 8, _mm512_add_pd(_mm512_loadu_pd(c + 8), s01));
  double* c1 = c + ldc;
  _mm512_storeu_pd(c1, _mm512_add_pd(_mm512_loadu_pd(c1), s10));
  _mm512_storeu_pd(c1 + 8, _mm512_add_pd(_mm512_loadu_pd(c1 + 8), s11));
  double* c2 = c + 2 * ldc;
  _mm512_storeu_pd(c2, _mm512_add_pd(_mm512_loadu_pd(c2), s20));
  _mm512_storeu_pd(c2 + 8, _mm512_add_pd(_mm512_loadu_pd(c2 + 8), s21));
  double* c3 = c + 3 * ldc;
  _mm512_storeu_pd(c3, _mm512_add_pd(_mm512_loadu_pd(c3), s30));
  _mm512_storeu_pd(c3 + 8, _mm512_add_pd(_mm512_loadu_pd(c3 + 8), s31));
}

inline void tile_1x16(const double* a, const double* b, std::size_t ldb,
                      double* c, std::size_t kk) {
  __m512d s0 = _mm512_setzero_pd(), s1 = s0;
  for (std::size_t p = 0; p < kk; ++p, b += ldb) {
    const __m512d v = _mm512_set1_pd(a[p]);
    s0 = _mm512_fmadd_pd(v, _mm512_loadu_pd(b), s0);
    s1 = _mm512_fmadd_pd(v, _mm512_loadu_pd(b + 8), s1);
  }
  _mm512_storeu_pd(c, _mm512_add_pd(_mm512_loadu_pd(c), s0));
  _mm512_storeu_pd(c + 8, _mm512_add_pd(_mm512_loadu_pd(c + 8), s1));
}

inline void tile_4x8(const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc,
                     std::size_t kk) {
  __m512d s0 = _mm512_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
  for (std::size_t p = 0; p < kk; ++p, b += ldb) {
    const __m512d b0 = _mm512_loadu_pd(b);
    s0 = _mm512_fmadd_pd(_mm512_set1_pd(a[p]), b0, s0);
    s1 = _mm512_fmadd_pd(_mm512_set1_pd(a[lda + p]), b0, s1);
    s2 = _mm512_fmadd_pd(_mm512_set1_pd(a[2 * lda + p]), b0, s2);
    s3 = _mm512_fmadd_pd(_mm512_set1_pd(a[3 * lda + p]), b0, s3);
  }
  _mm512_storeu_pd(c, _mm512_add_pd(_mm512_loadu_pd(c), s0));
  _mm512_storeu_pd(c + ldc, _mm512_add_pd(_mm512_loadu_pd(c + ldc), s1));
  _mm512_storeu_pd(c + 2 * ldc, _mm512_add_pd(_mm512_loadu_pd(c + 2 * ldc), s2));
  _mm512_storeu_pd(c + 3 * ldc, _mm512_add_pd(_mm512_loadu_pd(c + 3 * ldc), s3));
}

inline void tile_1x8(const double* a, const double* b, std::size_t ldb,
                     double* c, std::size_t kk) {
  __m512d s0 = _mm512_setzero_pd();
  for (std::size_t p = 0; p < kk; ++p, b += ldb) {
    s0 = _mm512_fmadd_pd(_mm512_set1_pd(a[p]), _mm512_loadu_pd(b), s0);
  }
  _mm512_storeu_pd(c, _mm512_add_pd(_mm512_loadu_pd(c), s0));
}

#endif  // __AVX512F__

// Reference-order scalar strip used for column tails and as the portable
// fallback. One accumulator per output, reduction ascending.
inline void strip_scalar(const double* a, const double* b, double* c,
                         std::size_t m, std::size_t k, std::size_t n,
                         std::size_t cols) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * b[p * n + j];
      crow[j] += acc;
    }
  }
}

#if !defined(__AVX512F__)

// Portable register-tile strip; compilers vectorize the fixed-width inner
// loops well (clang in particular).
template <int NB, int RB>
inline void tile_generic(const double* a, std::size_t lda, const double* b,
                         std::size_t ldb, double* c, std::size_t ldc,
                         std::size_t kk) {
  double acc[RB][NB];
  for (int r = 0; r < RB; ++r)
    for (int j = 0; j < NB; ++j) acc[r][j] = 0.0;
  for (std::size_t p = 0; p < kk; ++p) {
    const double* brow = b + p * ldb;
    for (int r = 0; r < RB; ++r) {
      const double av = a[r * lda + p];
      for (int j = 0; j < NB; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (int r = 0; r < RB; ++r)
    for (int j = 0; j < NB; ++j) c[r * ldc + j] += acc[r][j];
}

template <int NB>
inline void strip_generic(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2)
    tile_generic<NB, 2>(a + i * k, k, b, n, c + i * n, n, k);
  for (; i < m; ++i) tile_generic<NB, 1>(a + i * k, k, b, n, c + i * n, n, k);
}

#endif  // !__AVX512F__

#if defined(__AVX512F__)

// Tall-reduction layout (m small, k large): keep C resident and stream B in
// k-blocks so B is read once instead of once per row pair.
inline void gemm_short_m(const double* a, const double* b, double* c,
                         std::size_t m, std::size_t k, std::size_t n) {
  constexpr std::size_t kBlock = 16;
  std::size_t j = 0;
  while (j + 8 <= n) {
    const std::size_t width = (n - j >= 64) ? 64 : (n - j >= 32) ? 32
                                            : (n - j >= 16)      ? 16
                                                                 : 8;
    for (std::size_t p0 = 0; p0 < k; p0 += kBlock) {
      const std::size_t p1 = (p0 + kBlock < k) ? p0 + kBlock : k;
      for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n + j;
        if (width == 64) {
          __m512d s0 = _mm512_loadu_pd(crow);
          __m512d s1 = _mm512_loadu_pd(crow + 8);
          __m512d s2 = _mm512_loadu_pd(crow + 16);
          __m512d s3 = _mm512_loadu_pd(crow + 24);
          __m512d s4 = _mm512_loadu_pd(crow + 32);
          __m512d s5 = _mm512_loadu_pd(crow + 40);
          __m512d s6 = _mm512_loadu_pd(crow + 48);
          __m512d s7 = _mm512_loadu_pd(crow + 56);
          for (std::size_t p = p0; p < p1; ++p) {
            const double* brow = b + p * n + j;
            const __m512d v = _mm512_set1_pd(arow[p]);
            s0 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow), s0);
            s1 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 8), s1);
            s2 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 16), s2);
            s3 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 24), s3);
            s4 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 32), s4);
            s5 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 40), s5);
            s6 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 48), s6);
            s7 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 56), s7);
          }
          _mm512_storeu_pd(crow, s0);
          _mm512_storeu_pd(crow + 8, s1);
          _mm512_storeu_pd(crow + 16, s2);
          _mm512_storeu_pd(crow + 24, s3);
          _mm512_storeu_pd(crow + 32, s4);
          _mm512_storeu_pd(crow + 40, s5);
          _mm512_storeu_pd(crow + 48, s6);
          _mm512_storeu_pd(crow + 56, s7);
        } else if (width == 32) {
          __m512d s0 = _mm512_loadu_pd(crow);
          __m512d s1 = _mm512_loadu_pd(crow + 8);
          __m512d s2 = _mm512_loadu_pd(crow + 16);
          __m512d s3 = _mm512_loadu_pd(crow + 24);
          for (std::size_t p = p0; p < p1; ++p) {
            const double* brow = b + p * n + j;
            const __m512d v = _mm512_set1_pd(arow[p]);
            s0 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow), s0);
            s1 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 8), s1);
            s2 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 16), s2);
            s3 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 24), s3);
          }
          _mm512_storeu_pd(crow, s0);
          _mm512_storeu_pd(crow + 8, s1);
          _mm512_storeu_pd(crow + 16, s2);
          _mm512_storeu_pd(crow + 24, s3);
        } else if (width == 16) {
          __m512d s0 = _mm512_loadu_pd(crow);
          __m512d s1 = _mm512_loadu_pd(crow + 8);
          for (std::size_t p = p0; p < p1; ++p) {
            const double* brow = b + p * n + j;
            const __m512d v = _mm512_set1_pd(arow[p]);
            s0 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow), s0);
            s1 = _mm512_fmadd_pd(v, _mm512_loadu_pd(brow + 8), s1);
          }
          _mm512_storeu_pd(crow, s0);
          _mm512_storeu_pd(crow + 8, s1);
        } else {
          __m512d s0 = _mm512_loadu_pd(crow);
          for (std::size_t p = p0; p < p1; ++p) {
            s0 = _mm512_fmadd_pd(_mm512_set1_pd(arow[p]),
                                 _mm512_loadu_pd(b + p * n + j), s0);
          }
          _mm512_storeu_pd(crow, s0);
        }
      }
    }
    j += width;
  }
  if (j < n) strip_scalar(a, b + j, c + j, m, k, n, n - j);
}

#endif  // __AVX512F__

}  // namespace detail

// c (m x n) += a (m x k) * b (k x n), all row-major and dense.
inline void gemm_accumulate(const double* a, const double* b, double* c,
                            std::size_t m, std::size_t k, std::size_t n) {
#if defined(__AVX512F__)
  if (m <= 64 && k >= 8 * m && k >= 256 && n >= 8) {
    detail::gemm_short_m(a, b, c, m, k, n);
    return;
  }
  std::size_t j = 0;
  for (; j + 32 <= n; j += 32) {
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
      detail::tile_2x32(a + i * k, a + (i + 1) * k, b + j, n, c + i * n + j,
                        c + (i + 1) * n + j, k);
    }
    for (; i < m; ++i) {
      detail::tile_1x32(a + i * k, b + j, n, c + i * n + j, k);
    }
  }
  for (; j + 16 <= n; j += 16) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      detail::tile_4x16(a + i * k, k, b + j, n, c + i * n + j, n, k);
    }
    for (; i < m; ++i) {
      detail::tile_1x16(a + i * k, b + j, n, c + i * n + j, k);
    }
  }
  for (; j + 8 <= n; j += 8) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      detail::tile_4x8(a + i * k, k, b + j, n, c + i * n + j, n, k);
    }
    for (; i < m; ++i) {
      detail::tile_1x8(a + i * k, b + j, n, c + i * n + j, k);
    }
  }
  if (j < n) detail::strip_scalar(a, b + j, c + j, m, k, n, n - j);
#else
  std::size_t j = 0;
  for (; j + 32 <= n; j += 32) detail::strip_generic<32>(a, b + j, c + j, m, k, n);
  for (; j + 16 <= n; j += 16) detail::strip_generic<16>(a, b + j, c + j, m, k, n);
  for (; j + 8 <= n; j += 8) detail::strip_generic<8>(a, b + j, c + j, m, k, n);
  if (j < n) detail::strip_scalar(a, b + j, c + j, m, k, n, n - j);
#endif
}

// y (m) += a (m x n) * x (n). Row-dot form; each dot uses four interleaved
// partial sums combined in a fixed order.
inline void matvec_rows_accumulate(const double* a, const double* x, double* y,
                                   std::size_t m, std::size_t n) {
#if defined(__AVX512F__)
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    __m512d s0 = _mm512_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
    std::size_t j = 0;
    for (; j + 32 <= n; j += 32) {
      s0 = _mm512_fmadd_pd(_mm512_loadu_pd(arow + j), _mm512_loadu_pd(x + j), s0);
      s1 = _mm512_fmadd_pd(_mm512_loadu_pd(arow + j + 8),
                           _mm512_loadu_pd(x + j + 8), s1);
      s2 = _mm512_fmadd_pd(_mm512_loadu_pd(arow + j + 16),
                           _mm512_loadu_pd(x + j + 16), s2);
      s3 = _mm512_fmadd_pd(_mm512_loadu_pd(arow + j + 24),
                           _mm512_loadu_pd(x + j + 24), s3);
    }
    for (; j + 8 <= n; j += 8) {
      s0 = _mm512_fmadd_pd(_mm512_loadu_pd(arow + j), _mm512_loadu_pd(x + j), s0);
    }
    double acc = _mm512_reduce_add_pd(
        _mm512_add_pd(_mm512_add_pd(s0, s1), _mm512_add_pd(s2, s3)));
    for (; j < n; ++j) acc += arow[j] * x[j];
    y[i] += acc;
  }
#else
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      s0 += arow[j] * x[j];
      s1 += arow[j + 1] * x[j + 1];
      s2 += arow[j + 2] * x[j + 2];
      s3 += arow[j + 3] * x[j + 3];
    }
    double acc = (s0 + s1) + (s2 + s3);
    for (; j < n; ++j) acc += arow[j] * x[j];
    y[i] += acc;
  }
#endif
}

// c (m x n) += x (m) outer y (n).
inline void outer_accumulate(const double* x, const double* y, double* c,
                             std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double xv = x[i];
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += xv * y[j];
  }
}

// dst (cols x rows) = src (rows x cols) transposed. Blocked for locality.
inline void transpose(const double* src, double* dst, std::size_t rows,
                      std::size_t cols) {
  constexpr std::size_t kBlk = 8;
  for (std::size_t i0 = 0; i0 < rows; i0 += kBlk) {
    const std::size_t i1 = (i0 + kBlk < rows) ? i0 + kBlk : rows;
    for (std::size_t j0 = 0; j0 < cols; j0 += kBlk) {
      const std::size_t j1 = (j0 + kBlk < cols) ? j0 + kBlk : cols;
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j)
          dst[j * rows + i] = src[i * cols + j];
    }
  }
}

}  // namespace scnn
