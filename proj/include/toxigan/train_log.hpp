#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "toxigan/objectives.hpp"

namespace toxigan {

/// One generator update of one class in one adversarial epoch.
struct TrainRecord {
  int epoch = 0;
  int class_id = 0;
  StepKind kind = StepKind::toxicity;
  double g_loss = 0.0;
  double d_loss = 0.0;
  double grad_norm = 0.0;
  std::size_t ballast_size = 0;
  double reward_mean = 0.0;
  double wall_time_s = 0.0;  // kept in memory only; not part of the CSV
};

struct TrainLog {
  std::vector<TrainRecord> records;
};

/// Columns: epoch,class,step_kind,g_loss,d_loss,grad_norm,ballast_size,reward_mean
std::string train_log_csv(const TrainLog& log);
void write_train_log(const std::filesystem::path& path, const TrainLog& log);
TrainLog read_train_log(const std::filesystem::path& path);

StepKind parse_step_kind(const std::string& name);

}  // namespace toxigan
