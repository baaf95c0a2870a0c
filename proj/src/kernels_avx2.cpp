#include "hstg/kernels.hpp"

// AVX2/FMA variants of the hot loops. Compiled with -mavx2 -mfma and only
// entered after a cpuid check, so plain loads/stores here are safe. Results
// may differ from the scalar reference by reassociation/FMA rounding only;
// the equivalence tests bound that at 1e-12 relative.

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <cstddef>

namespace hstg::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

void matvec_avx2(const double* a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    __m256d acc = _mm256_setzero_pd();
    int j = 0;
    for (; j + 4 <= n; j += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), acc);
    double s = hsum(acc);
    for (; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

void conv3_avx2(const double* in, int in_ch, int n, const double* k3,
                const double* bias, double* out, int out_ch) {
  for (int o = 0; o < out_ch; ++o) {
    double* orow = out + static_cast<size_t>(o) * n;
    const __m256d b = _mm256_set1_pd(bias[o]);
    int v = 0;
    for (; v + 4 <= n; v += 4) _mm256_storeu_pd(orow + v, b);
    for (; v < n; ++v) orow[v] = bias[o];
    for (int i = 0; i < in_ch; ++i) {
      const double* irow = in + static_cast<size_t>(i) * n;
      const double* k = k3 + (static_cast<size_t>(o) * in_ch + i) * 3;
      const __m256d k0 = _mm256_set1_pd(k[0]);
      const __m256d k1 = _mm256_set1_pd(k[1]);
      const __m256d k2 = _mm256_set1_pd(k[2]);
      // interior lanes; borders handled scalar below
      int u = 1;
      for (; u + 4 <= n - 1; u += 4) {
        __m256d acc = _mm256_loadu_pd(orow + u);
        acc = _mm256_fmadd_pd(k0, _mm256_loadu_pd(irow + u - 1), acc);
        acc = _mm256_fmadd_pd(k1, _mm256_loadu_pd(irow + u), acc);
        acc = _mm256_fmadd_pd(k2, _mm256_loadu_pd(irow + u + 1), acc);
        _mm256_storeu_pd(orow + u, acc);
      }
      for (; u < n - 1; ++u)
        orow[u] += k[0] * irow[u - 1] + k[1] * irow[u] + k[2] * irow[u + 1];
      orow[0] += k[1] * irow[0] + (n > 1 ? k[2] * irow[1] : 0.0);
      if (n > 1) orow[n - 1] += k[0] * irow[n - 2] + k[1] * irow[n - 1];
    }
  }
}

void conv3_grad_in_avx2(const double* gout, int out_ch, int n, const double* k3,
                        double* gin, int in_ch) {
  for (int i = 0; i < in_ch; ++i) {
    double* grow = gin + static_cast<size_t>(i) * n;
    for (int o = 0; o < out_ch; ++o) {
      const double* gorow = gout + static_cast<size_t>(o) * n;
      const double* k = k3 + (static_cast<size_t>(o) * in_ch + i) * 3;
      const __m256d k0 = _mm256_set1_pd(k[0]);
      const __m256d k1 = _mm256_set1_pd(k[1]);
      const __m256d k2 = _mm256_set1_pd(k[2]);
      int u = 1;
      for (; u + 4 <= n - 1; u += 4) {
        __m256d acc = _mm256_loadu_pd(grow + u);
        acc = _mm256_fmadd_pd(k0, _mm256_loadu_pd(gorow + u + 1), acc);
        acc = _mm256_fmadd_pd(k1, _mm256_loadu_pd(gorow + u), acc);
        acc = _mm256_fmadd_pd(k2, _mm256_loadu_pd(gorow + u - 1), acc);
        _mm256_storeu_pd(grow + u, acc);
      }
      for (; u < n - 1; ++u)
        grow[u] += k[0] * gorow[u + 1] + k[1] * gorow[u] + k[2] * gorow[u - 1];
      grow[0] += k[1] * gorow[0] + (n > 1 ? k[0] * gorow[1] : 0.0);
      if (n > 1) grow[n - 1] += k[2] * gorow[n - 2] + k[1] * gorow[n - 1];
    }
  }
}

void conv3_grad_k_avx2(const double* gout, int out_ch, const double* in,
                       int in_ch, int n, double* gk, double* gbias) {
  for (int o = 0; o < out_ch; ++o) {
    const double* gorow = gout + static_cast<size_t>(o) * n;
    __m256d accb = _mm256_setzero_pd();
    int v = 0;
    for (; v + 4 <= n; v += 4) accb = _mm256_add_pd(accb, _mm256_loadu_pd(gorow + v));
    double gb = hsum(accb);
    for (; v < n; ++v) gb += gorow[v];
    gbias[o] += gb;
    for (int i = 0; i < in_ch; ++i) {
      const double* irow = in + static_cast<size_t>(i) * n;
      double* k = gk + (static_cast<size_t>(o) * in_ch + i) * 3;
      __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd(), a2 = _mm256_setzero_pd();
      int u = 1;
      for (; u + 4 <= n - 1; u += 4) {
        const __m256d g = _mm256_loadu_pd(gorow + u);
        a0 = _mm256_fmadd_pd(g, _mm256_loadu_pd(irow + u - 1), a0);
        a1 = _mm256_fmadd_pd(g, _mm256_loadu_pd(irow + u), a1);
        a2 = _mm256_fmadd_pd(g, _mm256_loadu_pd(irow + u + 1), a2);
      }
      double g0 = hsum(a0), g1 = hsum(a1), g2 = hsum(a2);
      for (; u < n - 1; ++u) {
        g0 += gorow[u] * irow[u - 1];
        g1 += gorow[u] * irow[u];
        g2 += gorow[u] * irow[u + 1];
      }
      g1 += gorow[0] * irow[0];
      if (n > 1) {
        g2 += gorow[0] * irow[1];
        g0 += gorow[n - 1] * irow[n - 2];
        g1 += gorow[n - 1] * irow[n - 1];
      }
      k[0] += g0;
      k[1] += g1;
      k[2] += g2;
    }
  }
}

void prelu_avx2(const double* x, double* y, int n, double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d s = _mm256_set1_pd(slope);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d neg = _mm256_mul_pd(v, s);
    const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GE_OQ);
    _mm256_storeu_pd(y + i, _mm256_blendv_pd(neg, v, mask));
  }
  for (; i < n; ++i) y[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
}

double prelu_grad_avx2(const double* x, const double* gy, double* gx, int n, double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d s = _mm256_set1_pd(slope);
  __m256d ds = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d gv = _mm256_loadu_pd(gy + i);
    const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GE_OQ);
    _mm256_storeu_pd(gx + i, _mm256_blendv_pd(_mm256_mul_pd(gv, s), gv, mask));
    ds = _mm256_add_pd(ds, _mm256_andnot_pd(mask, _mm256_mul_pd(gv, xv)));
  }
  double dslope = hsum(ds);
  for (; i < n; ++i) {
    if (x[i] >= 0.0) {
      gx[i] = gy[i];
    } else {
      dslope += gy[i] * x[i];
      gx[i] = gy[i] * slope;
    }
  }
  return dslope;
}

double sumsq_diff_avx2(const double* a, const double* b, int n) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, int n) {
  const __m256d a = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void momentum_step_avx2(double* p, double* v, const double* g, double beta,
                        double lr, int n) {
  const __m256d b = _mm256_set1_pd(beta);
  const __m256d nl = _mm256_set1_pd(-lr);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vn = _mm256_fmadd_pd(b, _mm256_loadu_pd(v + i), _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(v + i, vn);
    _mm256_storeu_pd(p + i, _mm256_fmadd_pd(nl, vn, _mm256_loadu_pd(p + i)));
  }
  for (; i < n; ++i) {
    v[i] = beta * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table = {
      matvec_avx2,      conv3_avx2,      conv3_grad_in_avx2,
      conv3_grad_k_avx2, prelu_avx2,     prelu_grad_avx2,
      sumsq_diff_avx2,  axpy_avx2,       momentum_step_avx2,
  };
  return table;
}

}  // namespace hstg::kern

#endif  // x86-64
