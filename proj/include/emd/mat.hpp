#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace emd {

// Dense row-major matrix. Everything in the model is rank <= 2, so this is
// the only tensor shape we carry. Vectors are 1xN.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {}

  T& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  const T& at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  T* row_ptr(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const T* row_ptr(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }
};

// C += op(A) * op(B). Loop orders keep the inner stride contiguous for the
// three cases the model actually hits (nn, nt, tn).
template <typename T>
void gemm_acc(const Mat<T>& A, bool ta, const Mat<T>& B, bool tb, Mat<T>& C) {
  const int m = ta ? A.cols : A.rows;
  const int k = ta ? A.rows : A.cols;
  const int kb = tb ? B.cols : B.rows;
  const int n = tb ? B.rows : B.cols;
  assert(k == kb);
  (void)kb;
  assert(C.rows == m && C.cols == n);

  if (!ta && !tb) {
    for (int i = 0; i < m; ++i) {
      T* crow = C.row_ptr(i);
      const T* arow = A.row_ptr(i);
      for (int p = 0; p < k; ++p) {
        const T a = arow[p];
        if (a == T(0)) continue;
        const T* brow = B.row_ptr(p);
        for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (int i = 0; i < m; ++i) {
      const T* arow = A.row_ptr(i);
      T* crow = C.row_ptr(i);
      for (int j = 0; j < n; ++j) {
        const T* brow = B.row_ptr(j);
        T s = T(0);
        for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
        crow[j] += s;
      }
    }
  } else if (ta && !tb) {
    for (int p = 0; p < k; ++p) {
      const T* arow = A.row_ptr(p);  // A is k x m
      const T* brow = B.row_ptr(p);
      for (int i = 0; i < m; ++i) {
        const T a = arow[i];
        if (a == T(0)) continue;
        T* crow = C.row_ptr(i);
        for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
      }
    }
  } else {
    // tt: C += A^T B^T, only exercised by op-level tests.
    for (int i = 0; i < m; ++i) {
      T* crow = C.row_ptr(i);
      for (int j = 0; j < n; ++j) {
        T s = T(0);
        for (int p = 0; p < k; ++p) s += A.at(p, i) * B.at(j, p);
        crow[j] += s;
      }
    }
  }
}

}  // namespace emd
