#pragma once

#include "docp/common.hpp"

#include <map>
#include <string>

namespace docp {

/// Canonical segment names used by the built-in problem families.
namespace segment {
inline constexpr const char* state_cost = "state_cost";
inline constexpr const char* control_cost = "control_cost";
inline constexpr const char* dynamics = "dynamics";
inline constexpr const char* initial_state = "initial_state";
}  // namespace segment

/// Flat differentiable parameter vector with named segments.
/// Segments must be disjoint and cover the vector exactly. Entries
/// flagged in `log_mask` are reparameterized in log space by
/// gradient-step helpers and must stay strictly positive.
class ParameterVector {
 public:
  struct Range {
    Eigen::Index start = 0;
    Eigen::Index size = 0;
  };

  ParameterVector() = default;

  explicit ParameterVector(Vector values)
      : values_(std::move(values)),
        log_mask_(std::vector<bool>(values_.size(), false)) {}

  /// Appends a named segment; returns its range.
  Range add_segment(const std::string& name, const Vector& vals) {
    require(!segments_.count(name), "duplicate parameter segment: " + name);
    Range r{values_.size(), vals.size()};
    Vector merged(values_.size() + vals.size());
    merged << values_, vals;
    values_ = std::move(merged);
    log_mask_.resize(values_.size(), false);
    segments_[name] = r;
    return r;
  }

  bool has_segment(const std::string& name) const {
    return segments_.count(name) != 0;
  }

  Range range(const std::string& name) const {
    auto it = segments_.find(name);
    require(it != segments_.end(), "unknown parameter segment: " + name);
    return it->second;
  }

  Eigen::Ref<const Vector> segment(const std::string& name) const {
    Range r = range(name);
    return values_.segment(r.start, r.size);
  }

  void set_segment(const std::string& name, const Vector& vals) {
    Range r = range(name);
    require(vals.size() == r.size, "segment size mismatch: " + name);
    values_.segment(r.start, r.size) = vals;
  }

  void mark_log_space(const std::string& name) {
    Range r = range(name);
    for (Eigen::Index i = 0; i < r.size; ++i) {
      require(values_[r.start + i] > 0.0,
              "log-space entries must be strictly positive: " + name);
      log_mask_[static_cast<std::size_t>(r.start + i)] = true;
    }
  }

  const std::vector<bool>& log_mask() const { return log_mask_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }
  const std::map<std::string, Range>& segments() const { return segments_; }

  /// Segments are disjoint and cover the vector exactly.
  bool covers_exactly() const {
    std::vector<int> hits(static_cast<std::size_t>(values_.size()), 0);
    for (const auto& [name, r] : segments_) {
      for (Eigen::Index i = r.start; i < r.start + r.size; ++i) {
        if (i < 0 || i >= values_.size()) return false;
        ++hits[static_cast<std::size_t>(i)];
      }
    }
    for (int h : hits)
      if (h != 1) return false;
    return true;
  }

 private:
  Vector values_;
  std::vector<bool> log_mask_;
  std::map<std::string, Range> segments_;
};

/// One first-order step on the parameters, respecting the log-space mask:
/// flagged entries are updated multiplicatively so they remain positive.
/// `direction` = +1 ascends, -1 descends.
inline void apply_gradient_step(ParameterVector& theta, const Vector& grad,
                                double lr, double direction) {
  require(grad.size() == theta.size(), "gradient size mismatch");
  Vector& v = theta.values();
  const auto& mask = theta.log_mask();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      // d/d(log p) = p * d/dp
      v[i] *= std::exp(direction * lr * grad[i] * v[i]);
    } else {
      v[i] += direction * lr * grad[i];
    }
  }
}

}  // namespace docp
