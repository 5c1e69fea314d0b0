#include "cstte/numcore/tape.hpp"

#include <cmath>

#include "cstte/error.hpp"

namespace cstte::num {

ParameterSet::ParameterSet(const ParameterSet& other) {
  items_.reserve(other.items_.size());
  for (const auto& p : other.items_) items_.push_back(std::make_unique<Parameter>(*p));
}

ParameterSet& ParameterSet::operator=(const ParameterSet& other) {
  if (this != &other) {
    ParameterSet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParameterSet::add(std::string name, Array value) {
  if (find(name)) throw ContractError("duplicate parameter name '" + name + "'");
  items_.push_back(std::make_unique<Parameter>(Parameter{std::move(name), std::move(value), {}}));
  return *items_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : items_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : items_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::get(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterSet::get(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p->value.size();
  return n;
}

std::vector<Parameter*> ParameterSet::pointers() {
  std::vector<Parameter*> out;
  out.reserve(items_.size());
  for (auto& p : items_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::pointers() const {
  std::vector<const Parameter*> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.get());
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p->zero_grad();
}

const Array& Var::value() const { return tape_->value(*this); }

bool Var::requires_grad() const { return tape_->requires_grad(*this); }

void Tape::check_owned(Var v) const {
  if (!v.valid() || &v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
}

Var Tape::constant(Array value) {
  if (spent_) throw ContractError("tape already used for backward");
  if (!value.all_finite()) throw NumericError("non-finite value in constant input");
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  if (spent_) throw ContractError("tape already used for backward");
  if (!p.value.all_finite()) throw NumericError("non-finite value in parameter '" + p.name + "'");
  Node n;
  n.external = &p.value;
  n.op = "param";
  if (mode_ == GradMode::record) {
    n.param = &p;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Array value, std::span<const Var> inputs, BackwardFn backward, const char* op) {
  if (spent_) throw ContractError("tape already used for backward");
  if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
  Node n;
  n.value = std::move(value);
  n.op = op;
  if (mode_ == GradMode::record) {
    for (const auto& in : inputs) {
      check_owned(in);
      if (nodes_[in.id()].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Array& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[v.id()].data();
}

bool Tape::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id()].requires_grad;
}

Array& Tape::grad(Var v) {
  check_owned(v);
  auto& n = nodes_[v.id()];
  if (!n.grad) n.grad.emplace(n.data().shape(), 0.0);
  return *n.grad;
}

void Tape::backward(Var loss) {
  check_owned(loss);
  if (spent_) throw ContractError("backward called twice on the same tape");
  if (mode_ != GradMode::record) throw ContractError("backward on an inference tape");
  if (nodes_[loss.id()].data().size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(nodes_[loss.id()].data().shape()));
  }
  spent_ = true;
  grad(loss).fill(1.0);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.param) {
      auto& p = *n.param;
      if (!p.grad) p.grad.emplace(p.value.shape(), 0.0);
      if (n.grad) {
        auto dst = p.grad->values();
        auto src = n.grad->values();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
      if (!p.grad->all_finite()) throw NumericError("non-finite gradient for '" + p.name + "'");
      continue;
    }
    if (!n.grad || !n.backward) continue;
    Array g = std::move(*n.grad);
    n.grad.reset();
    n.backward(*this, g);
    // intermediates are not needed past this point
    n.backward = nullptr;
  }
}

}  // namespace cstte::num
