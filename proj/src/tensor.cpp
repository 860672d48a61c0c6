#include "mlgib/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace mlgib {

namespace {

size_t shape_size(const std::vector<size_t>& shape) {
  size_t total = 1;
  for (size_t d : shape) total *= d;
  return total;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(strprintf("%s: shape mismatch", op));
}

void require_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.tape != b.tape)
    throw ArgumentError(strprintf("%s: tensors from different tapes", op));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

const std::vector<size_t>& Tensor::shape() const { return tape->node(id).shape; }
const std::vector<double>& Tensor::values() const { return tape->node(id).values; }
const std::vector<double>& Tensor::grad() const { return tape->node(id).grad; }
size_t Tensor::size() const { return tape->node(id).values.size(); }
size_t Tensor::rows() const { return shape().at(0); }
size_t Tensor::cols() const { return shape().at(1); }
bool Tensor::requires_grad() const { return tape->node(id).requires_grad; }

double Tensor::scalar() const {
  if (size() != 1) throw ArgumentError("Tensor::scalar: tensor is not a scalar");
  return values()[0];
}

Tensor Tape::make_node(std::vector<size_t> shape, std::vector<double> values,
                       bool requires_grad, std::function<void(Tape&)> backward) {
  if (shape_size(shape) != values.size())
    throw ShapeError("Tape::make_node: values length does not match shape");
  Node n;
  n.shape = std::move(shape);
  n.values = std::move(values);
  n.requires_grad = requires_grad && grad_enabled_;
  if (n.requires_grad) {
    n.grad.assign(n.values.size(), 0.0);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Tensor{this, static_cast<uint32_t>(nodes_.size() - 1)};
}

Tensor Tape::input(std::vector<size_t> shape, std::vector<double> values,
                   bool requires_grad) {
  return make_node(std::move(shape), std::move(values), requires_grad, {});
}

Tensor Tape::param(Parameter& p) {
  Tensor t = make_node(p.shape, p.value, true, {});
  nodes_[t.id].source = &p;
  return t;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape != this) throw ArgumentError("backward: loss is not on this tape");
  if (loss.size() != 1) throw ArgumentError("backward: loss must be a scalar");
  for (Node& n : nodes_)
    if (n.requires_grad) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this);
  }
  for (Node& n : nodes_) {
    if (n.source != nullptr)
      for (size_t i = 0; i < n.grad.size(); ++i) n.source->grad[i] += n.grad[i];
  }
}

// Unary elementwise ops share one skeleton; BWD_EXPR sees the input value x
// and the output value y.
#define MLGIB_UNARY(NAME, FWD_EXPR, BWD_EXPR)                                   \
  Tensor NAME(const Tensor& a) {                                               \
    Tape& t = *a.tape;                                                         \
    const std::vector<double> av = a.values();                                 \
    std::vector<double> out(av.size());                                        \
    for (size_t i = 0; i < av.size(); ++i) {                                   \
      double x = av[i];                                                        \
      out[i] = (FWD_EXPR);                                                     \
    }                                                                          \
    Tensor r = t.make_node(a.shape(), std::move(out), a.requires_grad(), {});  \
    if (r.requires_grad()) {                                                   \
      uint32_t aid = a.id, rid = r.id;                                         \
      t.node(rid).backward = [aid, rid](Tape& tp) {                            \
        auto& an = tp.node(aid);                                               \
        const auto& rn = tp.node(rid);                                         \
        if (!an.requires_grad) return;                                         \
        for (size_t i = 0; i < rn.grad.size(); ++i) {                          \
          double x = an.values[i];                                             \
          double y = rn.values[i];                                             \
          (void)x;                                                             \
          (void)y;                                                             \
          an.grad[i] += rn.grad[i] * (BWD_EXPR);                               \
        }                                                                      \
      };                                                                       \
    }                                                                          \
    return r;                                                                  \
  }

MLGIB_UNARY(neg, -x, -1.0)
MLGIB_UNARY(exp, std::exp(x), y)
MLGIB_UNARY(log, std::log(x), 1.0 / x)
MLGIB_UNARY(sqrt, std::sqrt(x), 0.5 / y)
MLGIB_UNARY(reciprocal, 1.0 / x, -y * y)
MLGIB_UNARY(sigmoid, stable_sigmoid(x), y * (1.0 - y))
MLGIB_UNARY(relu, x > 0.0 ? x : 0.0, x > 0.0 ? 1.0 : 0.0)
MLGIB_UNARY(softplus, stable_softplus(x), stable_sigmoid(x))

#undef MLGIB_UNARY

Tensor scale(const Tensor& a, double c) {
  Tape& t = *a.tape;
  std::vector<double> out = a.values();
  for (double& v : out) v *= c;
  Tensor r = t.make_node(a.shape(), std::move(out), a.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, rid = r.id;
    t.node(rid).backward = [aid, rid, c](Tape& tp) {
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      const auto& rn = tp.node(rid);
      for (size_t i = 0; i < rn.grad.size(); ++i) an.grad[i] += c * rn.grad[i];
    };
  }
  return r;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tape& t = *a.tape;
  std::vector<double> out = a.values();
  for (double& v : out) v += c;
  Tensor r = t.make_node(a.shape(), std::move(out), a.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, rid = r.id;
    t.node(rid).backward = [aid, rid](Tape& tp) {
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      const auto& rn = tp.node(rid);
      for (size_t i = 0; i < rn.grad.size(); ++i) an.grad[i] += rn.grad[i];
    };
  }
  return r;
}

namespace {

template <typename Fwd>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                 void (*bwd)(Tape&, uint32_t, uint32_t, uint32_t)) {
  require_same_tape(a, b, name);
  require_same_shape(a, b, name);
  Tape& t = *a.tape;
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
  bool rg = a.requires_grad() || b.requires_grad();
  Tensor r = t.make_node(a.shape(), std::move(out), rg, {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, bid = b.id, rid = r.id;
    t.node(rid).backward = [aid, bid, rid, bwd](Tape& tp) {
      bwd(tp, aid, bid, rid);
    };
  }
  return r;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](Tape& tp, uint32_t aid, uint32_t bid, uint32_t rid) {
        const auto& g = tp.node(rid).grad;
        auto& an = tp.node(aid);
        auto& bn = tp.node(bid);
        if (an.requires_grad)
          for (size_t i = 0; i < g.size(); ++i) an.grad[i] += g[i];
        if (bn.requires_grad)
          for (size_t i = 0; i < g.size(); ++i) bn.grad[i] += g[i];
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](Tape& tp, uint32_t aid, uint32_t bid, uint32_t rid) {
        const auto& g = tp.node(rid).grad;
        auto& an = tp.node(aid);
        auto& bn = tp.node(bid);
        if (an.requires_grad)
          for (size_t i = 0; i < g.size(); ++i) an.grad[i] += g[i];
        if (bn.requires_grad)
          for (size_t i = 0; i < g.size(); ++i) bn.grad[i] -= g[i];
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](Tape& tp, uint32_t aid, uint32_t bid, uint32_t rid) {
        const auto& g = tp.node(rid).grad;
        auto& an = tp.node(aid);
        auto& bn = tp.node(bid);
        if (an.requires_grad)
          for (size_t i = 0; i < g.size(); ++i)
            an.grad[i] += g[i] * bn.values[i];
        if (bn.requires_grad)
          for (size_t i = 0; i < g.size(); ++i)
            bn.grad[i] += g[i] * an.values[i];
      });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
    throw ShapeError("matmul: incompatible shapes");
  Tape& t = *a.tape;
  size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  {
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < m; ++i)
      for (size_t p = 0; p < k; ++p) {
        double aip = av[i * k + p];
        if (aip == 0.0) continue;
        const double* brow = bv.data() + p * n;
        double* orow = out.data() + i * n;
        for (size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
      }
  }
  bool rg = a.requires_grad() || b.requires_grad();
  Tensor r = t.make_node({m, n}, std::move(out), rg, {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, bid = b.id, rid = r.id;
    t.node(rid).backward = [aid, bid, rid, m, k, n](Tape& tp) {
      const auto& g = tp.node(rid).grad;
      auto& an = tp.node(aid);
      auto& bn = tp.node(bid);
      if (an.requires_grad) {
        // dA = G * B^T
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) {
            double gij = g[i * n + j];
            if (gij == 0.0) continue;
            const double* brow = bn.values.data() + 0;
            for (size_t p = 0; p < k; ++p)
              an.grad[i * k + p] += gij * brow[p * n + j];
          }
      }
      if (bn.requires_grad) {
        // dB = A^T * G
        for (size_t i = 0; i < m; ++i)
          for (size_t p = 0; p < k; ++p) {
            double aip = an.values[i * k + p];
            if (aip == 0.0) continue;
            const double* grow = g.data() + i * n;
            double* brow = bn.grad.data() + p * n;
            for (size_t j = 0; j < n; ++j) brow[j] += aip * grow[j];
          }
      }
    };
  }
  return r;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "concat_cols");
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.rows() != b.rows())
    throw ShapeError("concat_cols: row counts differ");
  Tape& t = *a.tape;
  size_t n = a.rows(), p = a.cols(), q = b.cols();
  std::vector<double> out(n * (p + q));
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < n; ++i) {
    std::copy(av.begin() + i * p, av.begin() + (i + 1) * p,
              out.begin() + i * (p + q));
    std::copy(bv.begin() + i * q, bv.begin() + (i + 1) * q,
              out.begin() + i * (p + q) + p);
  }
  bool rg = a.requires_grad() || b.requires_grad();
  Tensor r = t.make_node({n, p + q}, std::move(out), rg, {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, bid = b.id, rid = r.id;
    t.node(rid).backward = [aid, bid, rid, n, p, q](Tape& tp) {
      const auto& g = tp.node(rid).grad;
      auto& an = tp.node(aid);
      auto& bn = tp.node(bid);
      for (size_t i = 0; i < n; ++i) {
        if (an.requires_grad)
          for (size_t j = 0; j < p; ++j)
            an.grad[i * p + j] += g[i * (p + q) + j];
        if (bn.requires_grad)
          for (size_t j = 0; j < q; ++j)
            bn.grad[i * q + j] += g[i * (p + q) + p + j];
      }
    };
  }
  return r;
}

Tensor gather_rows(const Tensor& a, const std::vector<uint32_t>& idx) {
  if (a.shape().size() != 2) throw ShapeError("gather_rows: expects a matrix");
  Tape& t = *a.tape;
  size_t h = a.cols();
  for (uint32_t i : idx)
    if (i >= a.rows()) throw ArgumentError("gather_rows: index out of range");
  std::vector<double> out(idx.size() * h);
  const auto& av = a.values();
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy(av.begin() + idx[r] * h, av.begin() + (idx[r] + 1) * h,
              out.begin() + r * h);
  Tensor r = t.make_node({idx.size(), h}, std::move(out), a.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, rid = r.id;
    t.node(rid).backward = [aid, rid, idx, h](Tape& tp) {
      const auto& g = tp.node(rid).grad;
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      for (size_t r2 = 0; r2 < idx.size(); ++r2)
        for (size_t j = 0; j < h; ++j)
          an.grad[idx[r2] * h + j] += g[r2 * h + j];
    };
  }
  return r;
}

Tensor stack_cols(const std::vector<Tensor>& cols) {
  if (cols.empty()) throw ArgumentError("stack_cols: no columns");
  Tape& t = *cols[0].tape;
  size_t n = cols[0].size();
  bool rg = false;
  for (const Tensor& c : cols) {
    require_same_tape(cols[0], c, "stack_cols");
    if (c.shape().size() != 1 || c.size() != n)
      throw ShapeError("stack_cols: columns must be equal-length vectors");
    rg = rg || c.requires_grad();
  }
  size_t m = cols.size();
  std::vector<double> out(n * m);
  for (size_t j = 0; j < m; ++j) {
    const auto& cv = cols[j].values();
    for (size_t i = 0; i < n; ++i) out[i * m + j] = cv[i];
  }
  Tensor r = t.make_node({n, m}, std::move(out), rg, {});
  if (r.requires_grad()) {
    std::vector<uint32_t> ids(m);
    for (size_t j = 0; j < m; ++j) ids[j] = cols[j].id;
    uint32_t rid = r.id;
    t.node(rid).backward = [ids, rid, n, m](Tape& tp) {
      const auto& g = tp.node(rid).grad;
      for (size_t j = 0; j < m; ++j) {
        auto& cn = tp.node(ids[j]);
        if (!cn.requires_grad) continue;
        for (size_t i = 0; i < n; ++i) cn.grad[i] += g[i * m + j];
      }
    };
  }
  return r;
}

Tensor row_sum(const Tensor& a) {
  if (a.shape().size() != 2) throw ShapeError("row_sum: expects a matrix");
  Tape& t = *a.tape;
  size_t n = a.rows(), m = a.cols();
  std::vector<double> out(n, 0.0);
  const auto& av = a.values();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) out[i] += av[i * m + j];
  Tensor r = t.make_node({n}, std::move(out), a.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, rid = r.id;
    t.node(rid).backward = [aid, rid, n, m](Tape& tp) {
      const auto& g = tp.node(rid).grad;
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) an.grad[i * m + j] += g[i];
    };
  }
  return r;
}

Tensor sum(const Tensor& a) {
  Tape& t = *a.tape;
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor r = t.make_node({1}, {total}, a.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, rid = r.id;
    t.node(rid).backward = [aid, rid](Tape& tp) {
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      double g = tp.node(rid).grad[0];
      for (double& gv : an.grad) gv += g;
    };
  }
  return r;
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  require_same_tape(a, v, "add_rowvec");
  if (a.shape().size() != 2 || v.shape().size() != 1 || v.size() != a.cols())
    throw ShapeError("add_rowvec: vector length must equal column count");
  Tape& t = *a.tape;
  size_t n = a.rows(), m = a.cols();
  std::vector<double> out(a.values());
  const auto& vv = v.values();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) out[i * m + j] += vv[j];
  bool rg = a.requires_grad() || v.requires_grad();
  Tensor r = t.make_node({n, m}, std::move(out), rg, {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, vid = v.id, rid = r.id;
    t.node(rid).backward = [aid, vid, rid, n, m](Tape& tp) {
      const auto& g = tp.node(rid).grad;
      auto& an = tp.node(aid);
      auto& vn = tp.node(vid);
      if (an.requires_grad)
        for (size_t i = 0; i < g.size(); ++i) an.grad[i] += g[i];
      if (vn.requires_grad)
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < m; ++j) vn.grad[j] += g[i * m + j];
    };
  }
  return r;
}

Tensor mul_rowvec(const Tensor& a, const Tensor& v) {
  require_same_tape(a, v, "mul_rowvec");
  if (a.shape().size() != 2 || v.shape().size() != 1 || v.size() != a.cols())
    throw ShapeError("mul_rowvec: vector length must equal column count");
  Tape& t = *a.tape;
  size_t n = a.rows(), m = a.cols();
  std::vector<double> out(a.values());
  const auto& vv = v.values();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) out[i * m + j] *= vv[j];
  bool rg = a.requires_grad() || v.requires_grad();
  Tensor r = t.make_node({n, m}, std::move(out), rg, {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, vid = v.id, rid = r.id;
    t.node(rid).backward = [aid, vid, rid, n, m](Tape& tp) {
      const auto& g = tp.node(rid).grad;
      auto& an = tp.node(aid);
      auto& vn = tp.node(vid);
      if (an.requires_grad)
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < m; ++j)
            an.grad[i * m + j] += g[i * m + j] * vn.values[j];
      if (vn.requires_grad)
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < m; ++j)
            vn.grad[j] += g[i * m + j] * an.values[i * m + j];
    };
  }
  return r;
}

Tensor logsumexp_rows(const Tensor& a) {
  if (a.shape().size() != 2) throw ShapeError("logsumexp_rows: expects a matrix");
  Tape& t = *a.tape;
  size_t n = a.rows(), m = a.cols();
  const auto& av = a.values();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    double mx = av[i * m];
    for (size_t j = 1; j < m; ++j) mx = std::max(mx, av[i * m + j]);
    double s = 0.0;
    for (size_t j = 0; j < m; ++j) s += std::exp(av[i * m + j] - mx);
    out[i] = mx + std::log(s);
  }
  Tensor r = t.make_node({n}, std::move(out), a.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, rid = r.id;
    t.node(rid).backward = [aid, rid, n, m](Tape& tp) {
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      const auto& rn = tp.node(rid);
      for (size_t i = 0; i < n; ++i) {
        double g = rn.grad[i];
        if (g == 0.0) continue;
        for (size_t j = 0; j < m; ++j)
          an.grad[i * m + j] += g * std::exp(an.values[i * m + j] - rn.values[i]);
      }
    };
  }
  return r;
}

namespace {

void check_segments_sorted(const std::vector<uint32_t>& segments) {
  for (size_t i = 1; i < segments.size(); ++i)
    if (segments[i] < segments[i - 1])
      throw ArgumentError("segments must be non-decreasing");
}

}  // namespace

Tensor segment_sum(const Tensor& a, const std::vector<uint32_t>& segments,
                   size_t num_segments) {
  if (a.shape().size() != 2) throw ShapeError("segment_sum: expects a matrix");
  if (segments.size() != a.rows())
    throw ShapeError("segment_sum: one segment id per row required");
  check_segments_sorted(segments);
  for (uint32_t s : segments)
    if (s >= num_segments) throw ArgumentError("segment_sum: segment id out of range");
  Tape& t = *a.tape;
  size_t h = a.cols();
  std::vector<double> out(num_segments * h, 0.0);
  const auto& av = a.values();
  for (size_t e = 0; e < segments.size(); ++e)
    for (size_t j = 0; j < h; ++j) out[segments[e] * h + j] += av[e * h + j];
  Tensor r = t.make_node({num_segments, h}, std::move(out), a.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = a.id, rid = r.id;
    t.node(rid).backward = [aid, rid, segments, h](Tape& tp) {
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      const auto& g = tp.node(rid).grad;
      for (size_t e = 0; e < segments.size(); ++e)
        for (size_t j = 0; j < h; ++j)
          an.grad[e * h + j] += g[segments[e] * h + j];
    };
  }
  return r;
}

Tensor segment_softmax(const Tensor& scores, const std::vector<uint32_t>& segments) {
  if (scores.shape().size() != 1)
    throw ShapeError("segment_softmax: expects a vector of scores");
  if (segments.size() != scores.size())
    throw ShapeError("segment_softmax: one segment id per score required");
  if (scores.size() == 0)
    throw ArgumentError("segment_softmax: empty input");
  check_segments_sorted(segments);
  Tape& t = *scores.tape;
  const auto& sv = scores.values();
  size_t n = sv.size();
  std::vector<double> out(n);
  size_t start = 0;
  while (start < n) {
    size_t end = start;
    while (end < n && segments[end] == segments[start]) ++end;
    double mx = sv[start];
    for (size_t i = start + 1; i < end; ++i) mx = std::max(mx, sv[i]);
    double total = 0.0;
    for (size_t i = start; i < end; ++i) {
      out[i] = std::exp(sv[i] - mx);
      total += out[i];
    }
    for (size_t i = start; i < end; ++i) out[i] /= total;
    start = end;
  }
  Tensor r = t.make_node({n}, std::move(out), scores.requires_grad(), {});
  if (r.requires_grad()) {
    uint32_t aid = scores.id, rid = r.id;
    t.node(rid).backward = [aid, rid, segments, n](Tape& tp) {
      auto& an = tp.node(aid);
      if (!an.requires_grad) return;
      const auto& rn = tp.node(rid);
      size_t s = 0;
      while (s < n) {
        size_t e = s;
        while (e < n && segments[e] == segments[s]) ++e;
        double dot = 0.0;
        for (size_t i = s; i < e; ++i) dot += rn.grad[i] * rn.values[i];
        for (size_t i = s; i < e; ++i)
          an.grad[i] += rn.values[i] * (rn.grad[i] - dot);
        s = e;
      }
    };
  }
  return r;
}

Tensor gaussian_log_density_rows(const Tensor& z, const Tensor& mu,
                                 const Tensor& var) {
  for (double v : var.values())
    if (v <= 0.0)
      throw ArgumentError("gaussian_log_density: variance must be positive");
  constexpr double kLog2Pi = 1.8378770664093454836;
  // -1/2 log(2 pi var) - (z-mu)^2 / (2 var), summed over columns
  Tensor diff = sub(z, mu);
  Tensor quad = mul(mul(diff, diff), reciprocal(var));
  Tensor logvar = log(var);
  Tensor per_dim = scale(add(add_scalar(logvar, kLog2Pi), quad), -0.5);
  return row_sum(per_dim);
}

Tensor gaussian_log_density(const Tensor& z, const Tensor& mu, const Tensor& var) {
  require_same_shape(z, mu, "gaussian_log_density");
  require_same_shape(z, var, "gaussian_log_density");
  for (double v : var.values())
    if (v <= 0.0)
      throw ArgumentError("gaussian_log_density: variance must be positive");
  constexpr double kLog2Pi = 1.8378770664093454836;
  Tensor diff = sub(z, mu);
  Tensor quad = mul(mul(diff, diff), reciprocal(var));
  Tensor logvar = log(var);
  Tensor per_dim = scale(add(add_scalar(logvar, kLog2Pi), quad), -0.5);
  return sum(per_dim);
}

Tensor bce_with_logits_sum(const Tensor& logits, const Tensor& targets) {
  require_same_tape(logits, targets, "bce_with_logits_sum");
  require_same_shape(logits, targets, "bce_with_logits_sum");
  for (double v : logits.values())
    if (!std::isfinite(v)) throw ArgumentError("bce_with_logits_sum: non-finite logit");
  // softplus(x) - x*y, summed; equals -y log s(x) - (1-y) log(1-s(x))
  return sum(sub(softplus(logits), mul(logits, targets)));
}

std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& point, double h) {
  std::vector<double> grad(point.size());
  std::vector<double> x = point;
  for (size_t i = 0; i < point.size(); ++i) {
    double orig = x[i];
    x[i] = orig + h;
    double fp = f(x);
    x[i] = orig - h;
    double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double finite_difference_check(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& point, const std::vector<double>& analytic,
    double h) {
  if (analytic.size() != point.size())
    throw ArgumentError("finite_difference_check: gradient size mismatch");
  std::vector<double> numeric = fd_gradient(f, point, h);
  double max_rel = 0.0;
  for (size_t i = 0; i < point.size(); ++i) {
    double denom = std::max({std::abs(numeric[i]), std::abs(analytic[i]), 1e-8});
    max_rel = std::max(max_rel, std::abs(numeric[i] - analytic[i]) / denom);
  }
  return max_rel;
}

}  // namespace mlgib
