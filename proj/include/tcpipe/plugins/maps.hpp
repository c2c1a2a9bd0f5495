#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

namespace tcpipe {

// Byte-keyed map shared by plugins and the control plane. Each operation is
// atomic on its own; there are no multi-key transactions.
class PluginMap {
 public:
  enum class Kind { kHash, kArray };

  // Array maps take a 4-byte host-order index as key.
  PluginMap(Kind kind, std::size_t key_size, std::size_t value_size, std::size_t capacity);

  std::optional<std::vector<std::uint8_t>> lookup(std::span<const std::uint8_t> key) const;
  // False when sizes mismatch, the index is out of range or a hash map is full.
  bool update(std::span<const std::uint8_t> key, std::span<const std::uint8_t> value);
  bool erase(std::span<const std::uint8_t> key);
  std::size_t size() const;

  Kind kind() const { return kind_; }
  std::size_t key_size() const { return key_size_; }
  std::size_t value_size() const { return value_size_; }
  std::size_t capacity() const { return capacity_; }

  template <typename K, typename V>
  std::optional<V> get(const K& key) const {
    static_assert(std::is_trivially_copyable_v<K> && std::is_trivially_copyable_v<V>);
    auto raw = lookup(std::span(reinterpret_cast<const std::uint8_t*>(&key), sizeof(K)));
    if (!raw || raw->size() != sizeof(V)) return std::nullopt;
    V v;
    std::memcpy(&v, raw->data(), sizeof(V));
    return v;
  }
  template <typename K, typename V>
  bool put(const K& key, const V& value) {
    static_assert(std::is_trivially_copyable_v<K> && std::is_trivially_copyable_v<V>);
    return update(std::span(reinterpret_cast<const std::uint8_t*>(&key), sizeof(K)),
                  std::span(reinterpret_cast<const std::uint8_t*>(&value), sizeof(V)));
  }
  template <typename K>
  bool remove(const K& key) {
    return erase(std::span(reinterpret_cast<const std::uint8_t*>(&key), sizeof(K)));
  }

 private:
  Kind kind_;
  std::size_t key_size_;
  std::size_t value_size_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::map<std::vector<std::uint8_t>, std::vector<std::uint8_t>> hash_;
  std::vector<std::vector<std::uint8_t>> array_;
};

}  // namespace tcpipe
