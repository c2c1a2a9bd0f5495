#include "tcpipe/plugins/maps.hpp"

#include <algorithm>

namespace tcpipe {

namespace {
bool array_index(std::span<const std::uint8_t> key, std::size_t cap, std::uint32_t& idx) {
  if (key.size() != 4) return false;
  std::memcpy(&idx, key.data(), 4);
  return idx < cap;
}
}  // namespace

PluginMap::PluginMap(Kind kind, std::size_t key_size, std::size_t value_size, std::size_t capacity)
    : kind_(kind), key_size_(kind == Kind::kArray ? 4 : key_size), value_size_(value_size), capacity_(capacity) {
  if (kind_ == Kind::kArray) array_.assign(capacity_, std::vector<std::uint8_t>(value_size_, 0));
}

std::optional<std::vector<std::uint8_t>> PluginMap::lookup(std::span<const std::uint8_t> key) const {
  if (key.size() != key_size_) return std::nullopt;
  std::lock_guard lock(mu_);
  if (kind_ == Kind::kArray) {
    std::uint32_t i;
    if (!array_index(key, capacity_, i)) return std::nullopt;
    return array_[i];
  }
  auto it = hash_.find(std::vector<std::uint8_t>(key.begin(), key.end()));
  if (it == hash_.end()) return std::nullopt;
  return it->second;
}

bool PluginMap::update(std::span<const std::uint8_t> key, std::span<const std::uint8_t> value) {
  if (key.size() != key_size_ || value.size() != value_size_) return false;
  std::lock_guard lock(mu_);
  if (kind_ == Kind::kArray) {
    std::uint32_t i;
    if (!array_index(key, capacity_, i)) return false;
    array_[i].assign(value.begin(), value.end());
    return true;
  }
  std::vector<std::uint8_t> k(key.begin(), key.end());
  auto it = hash_.find(k);
  if (it == hash_.end() && hash_.size() >= capacity_) return false;
  hash_[std::move(k)].assign(value.begin(), value.end());
  return true;
}

bool PluginMap::erase(std::span<const std::uint8_t> key) {
  if (key.size() != key_size_) return false;
  std::lock_guard lock(mu_);
  if (kind_ == Kind::kArray) {
    std::uint32_t i;
    if (!array_index(key, capacity_, i)) return false;
    std::fill(array_[i].begin(), array_[i].end(), 0);
    return true;
  }
  return hash_.erase(std::vector<std::uint8_t>(key.begin(), key.end())) > 0;
}

std::size_t PluginMap::size() const {
  std::lock_guard lock(mu_);
  return kind_ == Kind::kArray ? capacity_ : hash_.size();
}

}  // namespace tcpipe
