#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace colfuse {

/// Base of every exception thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodeError : public Error {
 public:
  EncodeError(const std::string& what, std::size_t index)
      : Error(what + " (value index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class CorruptPage : public Error {
 public:
  using Error::Error;
};

/// Input does not fit a single page. `max_prefix()` values of the input do.
class PageOverflow : public Error {
 public:
  PageOverflow(const std::string& what, std::size_t max_prefix)
      : Error(what), max_prefix_(max_prefix) {}
  std::size_t max_prefix() const noexcept { return max_prefix_; }

 private:
  std::size_t max_prefix_;
};

class WrongLayout : public Error {
 public:
  using Error::Error;
};

class OversizedRecord : public Error {
 public:
  OversizedRecord(const std::string& what, std::size_t index) : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class CatalogError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

class HashTableOverflow : public Error {
 public:
  explicit HashTableOverflow(std::uint32_t table_id)
      : Error("hash table " + std::to_string(table_id) + " exceeded its load factor"),
        table_id_(table_id) {}
  std::uint32_t table_id() const noexcept { return table_id_; }

 private:
  std::uint32_t table_id_;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class ArithmeticOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace colfuse
