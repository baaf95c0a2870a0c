#include "hstg/kernels.hpp"

#include <cstddef>

// Reference kernels: plain loops, no tricks. The SIMD variants are checked
// against these.

namespace hstg::kern {
namespace {

void matvec_scalar(const double* a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

void conv3_scalar(const double* in, int in_ch, int n, const double* k3,
                  const double* bias, double* out, int out_ch) {
  for (int o = 0; o < out_ch; ++o) {
    double* orow = out + static_cast<size_t>(o) * n;
    for (int v = 0; v < n; ++v) orow[v] = bias[o];
    for (int i = 0; i < in_ch; ++i) {
      const double* irow = in + static_cast<size_t>(i) * n;
      const double* k = k3 + (static_cast<size_t>(o) * in_ch + i) * 3;
      for (int v = 0; v < n; ++v) {
        double s = k[1] * irow[v];
        if (v > 0) s += k[0] * irow[v - 1];
        if (v + 1 < n) s += k[2] * irow[v + 1];
        orow[v] += s;
      }
    }
  }
}

void conv3_grad_in_scalar(const double* gout, int out_ch, int n, const double* k3,
                          double* gin, int in_ch) {
  for (int i = 0; i < in_ch; ++i) {
    double* grow = gin + static_cast<size_t>(i) * n;
    for (int o = 0; o < out_ch; ++o) {
      const double* gorow = gout + static_cast<size_t>(o) * n;
      const double* k = k3 + (static_cast<size_t>(o) * in_ch + i) * 3;
      for (int v = 0; v < n; ++v) {
        double s = k[1] * gorow[v];
        if (v + 1 < n) s += k[0] * gorow[v + 1];
        if (v > 0) s += k[2] * gorow[v - 1];
        grow[v] += s;
      }
    }
  }
}

void conv3_grad_k_scalar(const double* gout, int out_ch, const double* in,
                         int in_ch, int n, double* gk, double* gbias) {
  for (int o = 0; o < out_ch; ++o) {
    const double* gorow = gout + static_cast<size_t>(o) * n;
    double gb = 0.0;
    for (int v = 0; v < n; ++v) gb += gorow[v];
    gbias[o] += gb;
    for (int i = 0; i < in_ch; ++i) {
      const double* irow = in + static_cast<size_t>(i) * n;
      double* k = gk + (static_cast<size_t>(o) * in_ch + i) * 3;
      double g0 = 0.0, g1 = 0.0, g2 = 0.0;
      for (int v = 0; v < n; ++v) {
        g1 += gorow[v] * irow[v];
        if (v > 0) g0 += gorow[v] * irow[v - 1];
        if (v + 1 < n) g2 += gorow[v] * irow[v + 1];
      }
      k[0] += g0;
      k[1] += g1;
      k[2] += g2;
    }
  }
}

void prelu_scalar(const double* x, double* y, int n, double slope) {
  for (int i = 0; i < n; ++i) y[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
}

double prelu_grad_scalar(const double* x, const double* gy, double* gx, int n, double slope) {
  double dslope = 0.0;
  for (int i = 0; i < n; ++i) {
    if (x[i] >= 0.0) {
      gx[i] = gy[i];
    } else {
      dslope += gy[i] * x[i];
      gx[i] = gy[i] * slope;
    }
  }
  return dslope;
}

double sumsq_diff_scalar(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void momentum_step_scalar(double* p, double* v, const double* g, double beta,
                          double lr, int n) {
  for (int i = 0; i < n; ++i) {
    v[i] = beta * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {
      matvec_scalar,     conv3_scalar,      conv3_grad_in_scalar,
      conv3_grad_k_scalar, prelu_scalar,    prelu_grad_scalar,
      sumsq_diff_scalar, axpy_scalar,       momentum_step_scalar,
  };
  return table;
}

}  // namespace hstg::kern
