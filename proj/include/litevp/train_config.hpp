#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace litevp {

struct SchedulerConfig {
  double factor = 0.5;
  int patience = 10;
  double min_delta = 1e-4;
  double min_lr = 1e-6;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double l2 = 1e-5;
  int batch_size = 32;
  double alpha_loss_weight = 1.0;
  double tolerance_vmaf = 2.0;
  double dropout = 0.2;
  SchedulerConfig scheduler;
  int max_epochs = 200;
  std::uint64_t seed = 1;
  /// Share of the train split held out for validation (best-checkpoint pick).
  double validation_fraction = 0.1;

  /// Throws InvalidInput when a field is out of range.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);

  /// Applies one "key=value" setting (keys as in to_json, scheduler fields
  /// prefixed "scheduler."). Throws InvalidInput for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
};

}  // namespace litevp
