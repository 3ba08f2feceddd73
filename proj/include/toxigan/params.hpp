#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace toxigan {

/// Named dense arrays stored in one contiguous buffer, so a model's
/// parameters (and its gradients, with the same layout) flatten for free.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return rows * cols; }
    bool operator==(const Entry&) const = default;
  };

  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  std::span<double> tensor(std::size_t id) {
    const auto& e = entries_[id];
    return {data_.data() + e.offset, e.size()};
  }
  std::span<const double> tensor(std::size_t id) const {
    const auto& e = entries_[id];
    return {data_.data() + e.offset, e.size()};
  }

  std::size_t find(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  std::size_t size() const { return data_.size(); }

  /// Same layout, all zeros.
  ParameterSet zeros_like() const;
  void fill(double v);
  bool same_layout(const ParameterSet& other) const;
  bool all_finite() const;
  double norm() const;

  bool operator==(const ParameterSet& other) const = default;

 private:
  std::vector<Entry> entries_;
  std::vector<double> data_;
};

/// Versioned on-disk container: JSON metadata followed by named float64
/// arrays. Shared by generator and discriminator checkpoints.
struct Checkpoint {
  nlohmann::json meta;
  ParameterSet params;
  std::uint64_t content_hash = 0;  // filled on read and write
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t write_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                               const ParameterSet& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace toxigan
