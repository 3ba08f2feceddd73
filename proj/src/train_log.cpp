#include "toxigan/train_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "toxigan/errors.hpp"

namespace toxigan {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

StepKind parse_step_kind(const std::string& name) {
  for (StepKind k : {StepKind::toxicity, StepKind::authenticity, StepKind::joint}) {
    if (name == step_kind_name(k)) return k;
  }
  throw SchemaError("unknown step kind: " + name);
}

std::string train_log_csv(const TrainLog& log) {
  std::string out = "epoch,class,step_kind,g_loss,d_loss,grad_norm,ballast_size,reward_mean\n";
  for (const auto& r : log.records) {
    out += std::to_string(r.epoch) + ',' + std::to_string(r.class_id) + ',' +
           step_kind_name(r.kind) + ',' + fmt(r.g_loss) + ',' + fmt(r.d_loss) + ',' +
           fmt(r.grad_norm) + ',' + std::to_string(r.ballast_size) + ',' + fmt(r.reward_mean) +
           '\n';
  }
  return out;
}

void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << train_log_csv(log);
}

TrainLog read_train_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open train log: " + path.string());
  TrainLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (++lineno == 1 || line.empty()) continue;
    std::istringstream is(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw ParseError("expected 8 columns", lineno);
    TrainRecord r;
    try {
      r.epoch = std::stoi(cells[0]);
      r.class_id = std::stoi(cells[1]);
      r.kind = parse_step_kind(cells[2]);
      r.g_loss = std::stod(cells[3]);
      r.d_loss = std::stod(cells[4]);
      r.grad_norm = std::stod(cells[5]);
      r.ballast_size = std::stoul(cells[6]);
      r.reward_mean = std::stod(cells[7]);
    } catch (const std::logic_error& e) {
      throw ParseError(std::string("bad train log value: ") + e.what(), lineno);
    }
    log.records.push_back(r);
  }
  return log;
}

}  // namespace toxigan
