#include "beac/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "beac/kernels.hpp"

namespace beac::ad {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::input: return "input";
    case OpKind::parameter: return "parameter";
    case OpKind::constant: return "constant";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::concat_cols: return "concat_cols";
    case OpKind::concat_rows: return "concat_rows";
    case OpKind::slice_cols: return "slice_cols";
    case OpKind::slice_rows: return "slice_rows";
    case OpKind::squared_error: return "squared_error";
    case OpKind::bce_logits: return "bce_logits";
    case OpKind::scale: return "scale";
    case OpKind::sum: return "sum";
  }
  return "unknown";
}

namespace {

double sigmoid_of(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor make(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

}  // namespace

NodeId Graph::push(Node node) {
  for (auto id : node.in) check_id(id);
  nodes_.push_back(std::move(node));
  forwarded_ = false;
  return nodes_.size() - 1;
}

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size()) throw GraphError("reference to unknown node #" + std::to_string(id));
}

std::string Graph::describe(NodeId id) const {
  const auto& n = nodes_[id];
  std::ostringstream os;
  os << op_name(n.op) << " node #" << id;
  if (!n.label.empty()) os << " '" << n.label << "'";
  return os.str();
}

NodeId Graph::input(const std::string& name) {
  if (auto it = named_.find(name); it != named_.end()) {
    if (nodes_[it->second].op != OpKind::input) throw GraphError("name '" + name + "' already declared as parameter");
    return it->second;
  }
  auto id = push(Node{OpKind::input, {}, name});
  named_.emplace(name, id);
  return id;
}

NodeId Graph::parameter(const std::string& name) {
  if (auto it = named_.find(name); it != named_.end()) {
    if (nodes_[it->second].op != OpKind::parameter) throw GraphError("name '" + name + "' already declared as input");
    return it->second;
  }
  auto id = push(Node{OpKind::parameter, {}, name});
  named_.emplace(name, id);
  return id;
}

NodeId Graph::constant(Tensor value, std::string label) {
  Node n{OpKind::constant, {}, std::move(label)};
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) { return push(Node{OpKind::matmul, {a, b}}); }
NodeId Graph::add(NodeId a, NodeId b) { return push(Node{OpKind::add, {a, b}}); }
NodeId Graph::sub(NodeId a, NodeId b) { return push(Node{OpKind::sub, {a, b}}); }
NodeId Graph::mul(NodeId a, NodeId b) { return push(Node{OpKind::mul, {a, b}}); }
NodeId Graph::tanh(NodeId a) { return push(Node{OpKind::tanh, {a}}); }
NodeId Graph::sigmoid(NodeId a) { return push(Node{OpKind::sigmoid, {a}}); }

NodeId Graph::concat_cols(std::vector<NodeId> parts) {
  if (parts.empty()) throw GraphError("concat_cols of zero parts");
  return push(Node{OpKind::concat_cols, std::move(parts)});
}

NodeId Graph::concat_rows(std::vector<NodeId> parts) {
  if (parts.empty()) throw GraphError("concat_rows of zero parts");
  return push(Node{OpKind::concat_rows, std::move(parts)});
}

NodeId Graph::slice_cols(NodeId a, std::size_t begin, std::size_t end) {
  if (begin >= end) throw GraphError("empty column slice");
  Node n{OpKind::slice_cols, {a}};
  n.lo = begin;
  n.hi = end;
  return push(std::move(n));
}

NodeId Graph::slice_rows(NodeId a, std::size_t begin, std::size_t end) {
  if (begin >= end) throw GraphError("empty row slice");
  Node n{OpKind::slice_rows, {a}};
  n.lo = begin;
  n.hi = end;
  return push(std::move(n));
}

NodeId Graph::squared_error(NodeId pred, NodeId target, NodeId weights) {
  return push(Node{OpKind::squared_error, {pred, target, weights}});
}

NodeId Graph::bce_logits(NodeId logits, NodeId target, NodeId weights) {
  return push(Node{OpKind::bce_logits, {logits, target, weights}});
}

NodeId Graph::scale(NodeId a, double factor) {
  Node n{OpKind::scale, {a}};
  n.factor = factor;
  return push(std::move(n));
}

NodeId Graph::sum(NodeId a) { return push(Node{OpKind::sum, {a}}); }

void Graph::label(NodeId id, std::string text) {
  check_id(id);
  nodes_[id].label = std::move(text);
}

const Tensor& Graph::forward(const Bindings& bindings) {
  forwarded_ = false;
  backwarded_ = false;
  for (NodeId id = 0; id < nodes_.size(); ++id) eval(id, bindings);
  forwarded_ = true;
  if (nodes_.empty()) throw GraphError("forward on empty graph");
  return nodes_.back().value;
}

const Tensor& Graph::value(NodeId id) const {
  check_id(id);
  if (!forwarded_) throw GraphError("value of " + describe(id) + " requested before forward");
  return nodes_[id].value;
}

void Graph::eval(NodeId id, const Bindings& bindings) {
  auto& n = nodes_[id];
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[n.in[i]].value; };
  auto fail = [&](const std::string& what) { throw ShapeError(describe(id) + ": " + what); };
  auto shapes = [&](std::initializer_list<std::size_t> which) {
    std::string s;
    for (auto i : which) s += (s.empty() ? "" : " vs ") + shape_string({in(i).rows(), in(i).cols()});
    return s;
  };

  switch (n.op) {
    case OpKind::input:
    case OpKind::parameter: {
      auto it = bindings.find(n.label);
      if (it == bindings.end()) throw GraphError(describe(id) + ": no binding named '" + n.label + "'");
      n.value = it->second;
      return;
    }
    case OpKind::constant:
      return;
    case OpKind::matmul: {
      const auto& a = in(0);
      const auto& b = in(1);
      if (a.cols() != b.rows()) fail("inner dimensions differ " + shapes({0, 1}));
      kernels::Dims d{a.rows(), a.cols(), b.cols()};
      std::vector<double> out(d.m * d.n);
      kernels::omp::matmul(a.data(), b.data(), out, d);
      n.value = make(d.m, d.n, std::move(out));
      return;
    }
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul: {
      const auto& a = in(0);
      const auto& b = in(1);
      const bool same = a.rows() == b.rows() && a.cols() == b.cols();
      const bool row_bcast = n.op == OpKind::add && b.rows() == 1 && b.cols() == a.cols();
      if (!same && !row_bcast) fail("incompatible shapes " + shapes({0, 1}));
      const auto cols = a.cols();
      std::vector<double> out(a.size());
      auto ad = a.data();
      auto bd = b.data();
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double bv = same ? bd[i] : bd[i % cols];
        switch (n.op) {
          case OpKind::add: out[i] = ad[i] + bv; break;
          case OpKind::sub: out[i] = ad[i] - bv; break;
          default: out[i] = ad[i] * bv; break;
        }
      }
      n.value = make(a.rows(), cols, std::move(out));
      return;
    }
    case OpKind::tanh:
    case OpKind::sigmoid: {
      const auto& a = in(0);
      std::vector<double> out(a.size());
      auto ad = a.data();
      if (n.op == OpKind::tanh) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(ad[i]);
      } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_of(ad[i]);
      }
      n.value = make(a.rows(), a.cols(), std::move(out));
      return;
    }
    case OpKind::concat_cols: {
      const auto rows = in(0).rows();
      std::size_t cols = 0;
      for (std::size_t p = 0; p < n.in.size(); ++p) {
        if (in(p).rows() != rows) fail("row counts differ across parts (" + std::to_string(rows) + " vs " + std::to_string(in(p).rows()) + ")");
        cols += in(p).cols();
      }
      std::vector<double> out(rows * cols);
      std::size_t offset = 0;
      for (std::size_t p = 0; p < n.in.size(); ++p) {
        const auto& t = in(p);
        const auto tc = t.cols();
        auto td = t.data();
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(td.begin() + r * tc, tc, out.begin() + r * cols + offset);
        offset += tc;
      }
      n.value = make(rows, cols, std::move(out));
      return;
    }
    case OpKind::concat_rows: {
      const auto cols = in(0).cols();
      std::size_t rows = 0;
      for (std::size_t p = 0; p < n.in.size(); ++p) {
        if (in(p).cols() != cols) fail("column counts differ across parts (" + std::to_string(cols) + " vs " + std::to_string(in(p).cols()) + ")");
        rows += in(p).rows();
      }
      std::vector<double> out;
      out.reserve(rows * cols);
      for (std::size_t p = 0; p < n.in.size(); ++p) {
        auto td = in(p).data();
        out.insert(out.end(), td.begin(), td.end());
      }
      n.value = make(rows, cols, std::move(out));
      return;
    }
    case OpKind::slice_cols: {
      const auto& a = in(0);
      if (n.hi > a.cols()) fail("column slice [" + std::to_string(n.lo) + "," + std::to_string(n.hi) + ") out of range for " + shapes({0}));
      const auto w = n.hi - n.lo;
      std::vector<double> out(a.rows() * w);
      auto ad = a.data();
      for (std::size_t r = 0; r < a.rows(); ++r) std::copy_n(ad.begin() + r * a.cols() + n.lo, w, out.begin() + r * w);
      n.value = make(a.rows(), w, std::move(out));
      return;
    }
    case OpKind::slice_rows: {
      const auto& a = in(0);
      if (n.hi > a.rows()) fail("row slice [" + std::to_string(n.lo) + "," + std::to_string(n.hi) + ") out of range for " + shapes({0}));
      auto ad = a.data();
      std::vector<double> out(ad.begin() + n.lo * a.cols(), ad.begin() + n.hi * a.cols());
      n.value = make(n.hi - n.lo, a.cols(), std::move(out));
      return;
    }
    case OpKind::squared_error:
    case OpKind::bce_logits: {
      const auto& p = in(0);
      const auto& t = in(1);
      const auto& w = in(2);
      if (p.rows() != t.rows() || p.cols() != t.cols()) fail("prediction/target shapes differ " + shapes({0, 1}));
      if (w.size() != p.rows()) fail("weights must hold one entry per row " + shapes({0, 2}));
      auto pd = p.data();
      auto td = t.data();
      auto wd = w.data();
      const auto cols = p.cols();
      double total = 0.0;
      for (std::size_t r = 0; r < p.rows(); ++r) {
        if (wd[r] == 0.0) continue;
        double row = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          const double z = pd[r * cols + c];
          const double y = td[r * cols + c];
          if (n.op == OpKind::squared_error) {
            row += (z - y) * (z - y);
          } else {
            row += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
          }
        }
        total += wd[r] * row;
      }
      n.value = Tensor::scalar(total);
      return;
    }
    case OpKind::scale: {
      const auto& a = in(0);
      std::vector<double> out(a.data().begin(), a.data().end());
      for (auto& v : out) v *= n.factor;
      n.value = make(a.rows(), a.cols(), std::move(out));
      return;
    }
    case OpKind::sum: {
      double s = 0.0;
      for (auto v : in(0).data()) s += v;
      n.value = Tensor::scalar(s);
      return;
    }
  }
}

std::vector<double>& Graph::grad_buffer(NodeId id) {
  auto& g = nodes_[id].grad;
  if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
  return g;
}

Bindings Graph::backward(NodeId loss) {
  check_id(loss);
  if (!forwarded_) throw GraphError("backward called before forward");
  if (nodes_[loss].value.size() != 1) {
    throw GraphError("backward requires a scalar loss, " + describe(loss) + " has shape " +
                     shape_string(nodes_[loss].value.shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  grad_buffer(loss)[0] = 1.0;
  for (NodeId id = loss + 1; id-- > 0;) {
    if (!nodes_[id].grad.empty()) propagate(id);
  }
  backwarded_ = true;

  Bindings out;
  for (const auto& [name, id] : named_) {
    try {
      out.emplace(name, gradient(id));
    } catch (const NonFiniteError&) {
      throw NonFiniteError("non-finite gradient for " + describe(id));
    }
  }
  return out;
}

Tensor Graph::gradient(NodeId id) const {
  check_id(id);
  if (!backwarded_) throw GraphError("gradient requested before backward");
  const auto& n = nodes_[id];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return Tensor(n.value.shape(), n.grad);
}

void Graph::propagate(NodeId id) {
  const Node& n = nodes_[id];
  const std::vector<double>& g = n.grad;
  auto in_val = [&](std::size_t i) -> const Tensor& { return nodes_[n.in[i]].value; };
  auto is_leafish = [&](std::size_t i) { return nodes_[n.in[i]].op == OpKind::constant; };

  switch (n.op) {
    case OpKind::input:
    case OpKind::parameter:
    case OpKind::constant:
      return;
    case OpKind::matmul: {
      const auto& a = in_val(0);
      const auto& b = in_val(1);
      kernels::Dims d{a.rows(), a.cols(), b.cols()};
      if (!is_leafish(0)) kernels::omp::matmul_a_bt_acc(g, b.data(), grad_buffer(n.in[0]), d);
      if (!is_leafish(1)) kernels::omp::matmul_at_b_acc(a.data(), g, grad_buffer(n.in[1]), d);
      return;
    }
    case OpKind::add:
    case OpKind::sub: {
      auto& ga = grad_buffer(n.in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      if (is_leafish(1)) return;
      auto& gb = grad_buffer(n.in[1]);
      const double sign = n.op == OpKind::add ? 1.0 : -1.0;
      if (gb.size() == g.size()) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
      } else {
        const auto cols = gb.size();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += sign * g[i];
      }
      return;
    }
    case OpKind::mul: {
      auto ad = in_val(0).data();
      auto bd = in_val(1).data();
      if (!is_leafish(0)) {
        auto& ga = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bd[i];
      }
      if (!is_leafish(1)) {
        auto& gb = grad_buffer(n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ad[i];
      }
      return;
    }
    case OpKind::tanh:
    case OpKind::sigmoid: {
      if (is_leafish(0)) return;
      auto y = n.value.data();
      auto& ga = grad_buffer(n.in[0]);
      if (n.op == OpKind::tanh) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
      }
      return;
    }
    case OpKind::concat_cols: {
      const auto rows = n.value.rows();
      const auto cols = n.value.cols();
      std::size_t offset = 0;
      for (std::size_t p = 0; p < n.in.size(); ++p) {
        const auto tc = in_val(p).cols();
        if (!is_leafish(p)) {
          auto& gp = grad_buffer(n.in[p]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < tc; ++c) gp[r * tc + c] += g[r * cols + offset + c];
        }
        offset += tc;
      }
      return;
    }
    case OpKind::concat_rows: {
      std::size_t offset = 0;
      for (std::size_t p = 0; p < n.in.size(); ++p) {
        const auto len = in_val(p).size();
        if (!is_leafish(p)) {
          auto& gp = grad_buffer(n.in[p]);
          for (std::size_t i = 0; i < len; ++i) gp[i] += g[offset + i];
        }
        offset += len;
      }
      return;
    }
    case OpKind::slice_cols: {
      if (is_leafish(0)) return;
      const auto src_cols = in_val(0).cols();
      const auto w = n.hi - n.lo;
      auto& ga = grad_buffer(n.in[0]);
      for (std::size_t r = 0; r < n.value.rows(); ++r)
        for (std::size_t c = 0; c < w; ++c) ga[r * src_cols + n.lo + c] += g[r * w + c];
      return;
    }
    case OpKind::slice_rows: {
      if (is_leafish(0)) return;
      const auto cols = in_val(0).cols();
      auto& ga = grad_buffer(n.in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[n.lo * cols + i] += g[i];
      return;
    }
    case OpKind::squared_error:
    case OpKind::bce_logits: {
      const auto& p = in_val(0);
      const auto& t = in_val(1);
      auto pd = p.data();
      auto td = t.data();
      auto wd = in_val(2).data();
      const auto cols = p.cols();
      const bool dp = !is_leafish(0);
      const bool dt = !is_leafish(1);
      std::vector<double>* gp = dp ? &grad_buffer(n.in[0]) : nullptr;
      std::vector<double>* gt = dt ? &grad_buffer(n.in[1]) : nullptr;
      for (std::size_t r = 0; r < p.rows(); ++r) {
        const double w = wd[r] * g[0];
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) {
          const auto i = r * cols + c;
          if (n.op == OpKind::squared_error) {
            const double e = 2.0 * (pd[i] - td[i]) * w;
            if (dp) (*gp)[i] += e;
            if (dt) (*gt)[i] -= e;
          } else {
            if (dp) (*gp)[i] += (sigmoid_of(pd[i]) - td[i]) * w;
            if (dt) (*gt)[i] -= pd[i] * w;
          }
        }
      }
      return;
    }
    case OpKind::scale: {
      if (is_leafish(0)) return;
      auto& ga = grad_buffer(n.in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.factor * g[i];
      return;
    }
    case OpKind::sum: {
      if (is_leafish(0)) return;
      auto& ga = grad_buffer(n.in[0]);
      for (auto& v : ga) v += g[0];
      return;
    }
  }
}

}  // namespace beac::ad
