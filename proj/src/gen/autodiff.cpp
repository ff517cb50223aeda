#include "latticeforge/gen/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace latticeforge::gen {

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::constant(Matrix value) {
    nodes_.push_back({std::move(value), nullptr, Matrix(), false, nullptr});
    return {this, nodes_.size() - 1};
}

Var Tape::leaf(Matrix value) {
    nodes_.push_back({std::move(value), nullptr, Matrix(), true, nullptr});
    return {this, nodes_.size() - 1};
}

Var Tape::borrow(const Matrix& value, bool trainable) {
    nodes_.push_back({Matrix(), &value, Matrix(), trainable, nullptr});
    return {this, nodes_.size() - 1};
}

Matrix Tape::take_grad(const Var& v) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) return Matrix::Zero(value(v).rows(), value(v).cols());
    return std::move(n.grad);
}

Var Tape::push(Matrix value, std::vector<std::size_t> parents,
               std::function<void(Tape&, std::size_t)> back) {
    bool needs = false;
    for (std::size_t p : parents) needs = needs || nodes_[p].needs_grad;
    nodes_.push_back({std::move(value), nullptr, Matrix(), needs, needs ? std::move(back) : nullptr});
    return {this, nodes_.size() - 1};
}

Matrix& Tape::grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.get().rows(), n.get().cols());
    return n.grad;
}

void Tape::backward(const Var& out) {
    if (value(out).size() != 1) throw std::logic_error("backward() needs a scalar output");
    grad_ref(out.id)(0, 0) += 1.0;
    for (std::size_t i = out.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back && n.grad.size() != 0) n.back(*this, i);
    }
}

namespace {

Tape* same_tape(const Var& a, const Var& b) {
    if (a.tape != b.tape) throw std::logic_error("operands live on different tapes");
    return a.tape;
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    Tape* t = same_tape(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t->push(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        if (tp.needs_grad(ia)) tp.grad_ref(ia).noalias() += g * tp.value_ref(ib).transpose();
        if (tp.needs_grad(ib)) tp.grad_ref(ib).noalias() += tp.value_ref(ia).transpose() * g;
    });
}

Var add(const Var& a, const Var& b) {
    Tape* t = same_tape(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t->push(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        if (tp.needs_grad(ia)) tp.grad_ref(ia) += g;
        if (tp.needs_grad(ib)) tp.grad_ref(ib) += g;
    });
}

Var sub(const Var& a, const Var& b) {
    Tape* t = same_tape(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t->push(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        if (tp.needs_grad(ia)) tp.grad_ref(ia) += g;
        if (tp.needs_grad(ib)) tp.grad_ref(ib) -= g;
    });
}

Var hadamard(const Var& a, const Var& b) {
    Tape* t = same_tape(a, b);
    const std::size_t ia = a.id, ib = b.id;
    return t->push(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        if (tp.needs_grad(ia)) tp.grad_ref(ia) += g.cwiseProduct(tp.value_ref(ib));
        if (tp.needs_grad(ib)) tp.grad_ref(ib) += g.cwiseProduct(tp.value_ref(ia));
    });
}

Var scale(const Var& a, double s) {
    const std::size_t ia = a.id;
    return a.tape->push(s * a.value(), {ia}, [ia, s](Tape& tp, std::size_t self) {
        tp.grad_ref(ia) += s * tp.grad_ref(self);
    });
}

Var add_row(const Var& a, const Var& row) {
    Tape* t = same_tape(a, row);
    if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row shape mismatch");
    const std::size_t ia = a.id, ir = row.id;
    Matrix out = a.value();
    out.rowwise() += row.value().row(0);
    return t->push(std::move(out), {ia, ir}, [ia, ir](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        if (tp.needs_grad(ia)) tp.grad_ref(ia) += g;
        if (tp.needs_grad(ir)) tp.grad_ref(ir) += g.colwise().sum();
    });
}

Var broadcast_rows(const Var& row, Eigen::Index n) {
    const std::size_t ir = row.id;
    Matrix out = row.value().replicate(n, 1);
    return row.tape->push(std::move(out), {ir}, [ir](Tape& tp, std::size_t self) {
        tp.grad_ref(ir) += tp.grad_ref(self).colwise().sum();
    });
}

Var transpose(const Var& a) {
    const std::size_t ia = a.id;
    return a.tape->push(a.value().transpose(), {ia}, [ia](Tape& tp, std::size_t self) {
        tp.grad_ref(ia) += tp.grad_ref(self).transpose();
    });
}

Var silu(const Var& a) {
    const std::size_t ia = a.id;
    const Matrix& x = a.value();
    Matrix out = x.unaryExpr([](double v) { return v * sigmoid(v); });
    return a.tape->push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Matrix& xv = tp.value_ref(ia);
        const Matrix d = xv.unaryExpr([](double v) {
            const double s = sigmoid(v);
            return s * (1.0 + v * (1.0 - s));
        });
        tp.grad_ref(ia) += tp.grad_ref(self).cwiseProduct(d);
    });
}

Var abs(const Var& a) {
    const std::size_t ia = a.id;
    return a.tape->push(a.value().cwiseAbs(), {ia}, [ia](Tape& tp, std::size_t self) {
        const Matrix sign = tp.value_ref(ia).unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
        tp.grad_ref(ia) += tp.grad_ref(self).cwiseProduct(sign);
    });
}

Var softmax_rows(const Var& a) {
    const std::size_t ia = a.id;
    Matrix out = a.value();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double m = out.row(r).maxCoeff();
        out.row(r) = (out.row(r).array() - m).exp();
        out.row(r) /= out.row(r).sum();
    }
    return a.tape->push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
        const Matrix& y = tp.value_ref(self);
        const Matrix& g = tp.grad_ref(self);
        const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
        Matrix dx = g;
        dx.colwise() -= dot;
        tp.grad_ref(ia) += dx.cwiseProduct(y);
    });
}

Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps) {
    Tape* t = a.tape;
    const Matrix& x = a.value();
    const Eigen::Index c = x.cols();
    Matrix xhat(x.rows(), c);
    Eigen::VectorXd inv_std(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (x.row(r).array() - mean) * inv_std(r);
    }
    Matrix out = xhat.array().rowwise() * gain.value().row(0).array();
    out.rowwise() += bias.value().row(0);
    const std::size_t ia = a.id, ig = gain.id, ib = bias.id;
    return t->push(std::move(out), {ia, ig, ib},
                   [ia, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp, std::size_t self) {
                       const Matrix& g = tp.grad_ref(self);
                       if (tp.needs_grad(ig)) tp.grad_ref(ig) += g.cwiseProduct(xhat).colwise().sum();
                       if (tp.needs_grad(ib)) tp.grad_ref(ib) += g.colwise().sum();
                       if (!tp.needs_grad(ia)) return;
                       const Matrix dxhat = g.array().rowwise() * tp.value_ref(ig).row(0).array();
                       Matrix& gx = tp.grad_ref(ia);
                       for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                           const double m1 = dxhat.row(r).mean();
                           const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                           gx.row(r).array() +=
                               inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                       }
                   });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
    const std::size_t ia = a.id;
    return a.tape->push(a.value().middleCols(start, count), {ia}, [ia, start, count](Tape& tp, std::size_t self) {
        tp.grad_ref(ia).middleCols(start, count) += tp.grad_ref(self);
    });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
    const std::size_t ia = a.id;
    return a.tape->push(a.value().middleRows(start, count), {ia}, [ia, start, count](Tape& tp, std::size_t self) {
        tp.grad_ref(ia).middleRows(start, count) += tp.grad_ref(self);
    });
}

Var vcat(const std::vector<Var>& parts) {
    Tape* t = parts.front().tape;
    Eigen::Index rows = 0;
    std::vector<std::size_t> ids;
    std::vector<Eigen::Index> heights;
    for (const auto& p : parts) {
        rows += p.rows();
        ids.push_back(p.id);
        heights.push_back(p.rows());
    }
    Matrix out(rows, parts.front().cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    return t->push(std::move(out), ids, [ids, heights](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        Eigen::Index at2 = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (tp.needs_grad(ids[k])) tp.grad_ref(ids[k]) += g.middleRows(at2, heights[k]);
            at2 += heights[k];
        }
    });
}

Var hcat(const std::vector<Var>& parts) {
    Tape* t = parts.front().tape;
    Eigen::Index cols = 0;
    std::vector<std::size_t> ids;
    std::vector<Eigen::Index> widths;
    for (const auto& p : parts) {
        cols += p.cols();
        ids.push_back(p.id);
        widths.push_back(p.cols());
    }
    Matrix out(parts.front().rows(), cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    return t->push(std::move(out), ids, [ids, widths](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        Eigen::Index at2 = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (tp.needs_grad(ids[k])) tp.grad_ref(ids[k]) += g.middleCols(at2, widths[k]);
            at2 += widths[k];
        }
    });
}

Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows) {
    const std::size_t ia = a.id;
    Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = a.value().row(rows[k]);
    return a.tape->push(std::move(out), {ia}, [ia, rows](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad_ref(self);
        Matrix& ga = tp.grad_ref(ia);
        for (std::size_t k = 0; k < rows.size(); ++k) ga.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
    });
}

Var mean_squared_error(const Var& a, const Matrix& target) {
    const std::size_t ia = a.id;
    const Matrix diff = a.value() - target;
    const double count = static_cast<double>(diff.size());
    Matrix out(1, 1);
    out(0, 0) = diff.squaredNorm() / count;
    return a.tape->push(std::move(out), {ia}, [ia, diff, count](Tape& tp, std::size_t self) {
        tp.grad_ref(ia) += (2.0 * tp.grad_ref(self)(0, 0) / count) * diff;
    });
}

Var bce_with_logits(const Var& logits, const Matrix& targets) {
    const std::size_t ia = logits.id;
    const Matrix& z = logits.value();
    const double count = static_cast<double>(z.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double v = z(i);
        total += std::max(v, 0.0) - v * targets(i) + std::log1p(std::exp(-std::abs(v)));
    }
    Matrix out(1, 1);
    out(0, 0) = total / count;
    return logits.tape->push(std::move(out), {ia}, [ia, targets, count](Tape& tp, std::size_t self) {
        const Matrix& zv = tp.value_ref(ia);
        const double g = tp.grad_ref(self)(0, 0) / count;
        Matrix& gz = tp.grad_ref(ia);
        for (Eigen::Index i = 0; i < zv.size(); ++i) gz(i) += g * (sigmoid(zv(i)) - targets(i));
    });
}

}  // namespace latticeforge::gen
