#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cstte/numcore/array.hpp"

namespace cstte::num {

class Tape;

/// A named learnable array. `grad` is empty until a backward pass reaches
/// the parameter and is cleared again by the optimizer step.
struct Parameter {
  std::string name;
  Array value;
  std::optional<Array> grad;

  void zero_grad() { grad.reset(); }
};

/// Owns parameters with stable addresses, kept in insertion order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet& other);
  ParameterSet& operator=(const ParameterSet& other);
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Parameter& add(std::string name, Array value);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;
  std::vector<Parameter*> pointers();
  std::vector<const Parameter*> pointers() const;

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> items_;
};

/// Handle to an array recorded on a tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class GradMode {
  record,     // parameters are differentiable leaves
  inference,  // parameters enter as constants; nothing is recorded for backward
};

/// Linear record of forward operations. Single-owner and single-use: one
/// backward pass per tape, after which the tape is spent.
class Tape {
 public:
  /// Accumulates this node's output gradient into its inputs' gradients.
  using BackwardFn = std::function<void(Tape& tape, const Array& out_grad)>;

  explicit Tape(GradMode mode = GradMode::record) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  GradMode mode() const { return mode_; }
  std::size_t size() const { return nodes_.size(); }
  bool spent() const { return spent_; }

  Var constant(Array value);
  /// Leaf bound to `p`. The parameter must outlive the tape and stay
  /// unmodified until backward completes.
  Var param(Parameter& p);

  /// Records an operation result. `backward` is dropped when no input
  /// requires a gradient. Throws NumericError on non-finite values.
  Var record(Array value, std::span<const Var> inputs, BackwardFn backward, const char* op);

  const Array& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient buffer of `v`, zero-initialised on first access.
  Array& grad(Var v);

  /// Propagates d(loss)/d(node) back to every parameter leaf; accumulates
  /// into Parameter::grad. Loss must be a single-element array.
  void backward(Var loss);

 private:
  struct Node {
    Array value;
    const Array* external = nullptr;  // parameter value, not copied
    Parameter* param = nullptr;
    std::optional<Array> grad;
    BackwardFn backward;
    bool requires_grad = false;
    const char* op = "";

    const Array& data() const { return external ? *external : value; }
  };

  void check_owned(Var v) const;

  GradMode mode_;
  bool spent_ = false;
  std::vector<Node> nodes_;
};

}  // namespace cstte::num
