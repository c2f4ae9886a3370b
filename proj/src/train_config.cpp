#include "litevp/train_config.hpp"

#include <charconv>
#include <cmath>

#include "litevp/error.hpp"

namespace litevp {

using nlohmann::json;

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw InvalidInput(std::string("config: ") + name + " must be positive");
  };
  positive(learning_rate, "learning_rate");
  positive(alpha_loss_weight, "alpha_loss_weight");
  positive(scheduler.factor, "scheduler.factor");
  positive(scheduler.min_lr, "scheduler.min_lr");
  if (l2 < 0) throw InvalidInput("config: l2 must be >= 0");
  if (batch_size < 2) throw InvalidInput("config: batch_size must be >= 2 (batchnorm)");
  if (tolerance_vmaf < 0) throw InvalidInput("config: tolerance_vmaf must be >= 0");
  if (dropout < 0 || dropout >= 1) throw InvalidInput("config: dropout must be in [0, 1)");
  if (scheduler.factor >= 1) throw InvalidInput("config: scheduler.factor must be < 1");
  if (scheduler.patience < 1) throw InvalidInput("config: scheduler.patience must be >= 1");
  if (scheduler.min_delta < 0) throw InvalidInput("config: scheduler.min_delta must be >= 0");
  if (max_epochs < 1) throw InvalidInput("config: max_epochs must be >= 1");
  if (validation_fraction < 0 || validation_fraction >= 1) {
    throw InvalidInput("config: validation_fraction must be in [0, 1)");
  }
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"l2", l2},
          {"batch_size", batch_size},
          {"alpha_loss_weight", alpha_loss_weight},
          {"tolerance_vmaf", tolerance_vmaf},
          {"dropout", dropout},
          {"scheduler.factor", scheduler.factor},
          {"scheduler.patience", scheduler.patience},
          {"scheduler.min_delta", scheduler.min_delta},
          {"scheduler.min_lr", scheduler.min_lr},
          {"max_epochs", max_epochs},
          {"seed", seed},
          {"validation_fraction", validation_fraction}};
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidInput("config: " + key + ": not a number: " + v);
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidInput("config: " + key + ": not an integer: " + v);
  return out;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "learning_rate") learning_rate = to_double(key, value);
  else if (key == "l2") l2 = to_double(key, value);
  else if (key == "batch_size") batch_size = to_int<int>(key, value);
  else if (key == "alpha_loss_weight") alpha_loss_weight = to_double(key, value);
  else if (key == "tolerance_vmaf") tolerance_vmaf = to_double(key, value);
  else if (key == "dropout") dropout = to_double(key, value);
  else if (key == "scheduler.factor") scheduler.factor = to_double(key, value);
  else if (key == "scheduler.patience") scheduler.patience = to_int<int>(key, value);
  else if (key == "scheduler.min_delta") scheduler.min_delta = to_double(key, value);
  else if (key == "scheduler.min_lr") scheduler.min_lr = to_double(key, value);
  else if (key == "max_epochs") max_epochs = to_int<int>(key, value);
  else if (key == "seed") seed = to_int<std::uint64_t>(key, value);
  else if (key == "validation_fraction") validation_fraction = to_double(key, value);
  else throw InvalidInput("config: unknown key " + key);
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  if (!j.is_object()) throw ParseError("config: expected an object");
  for (const auto& [key, v] : j.items()) {
    if (!v.is_number()) throw ParseError("config: " + key + " must be a number");
    // Route through set() so both entry points share key handling; dump()
    // prints integers without a fraction and doubles round-trip exactly.
    c.set(key, v.dump());
  }
  return c;
}

}  // namespace litevp
