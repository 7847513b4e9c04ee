#ifndef RERE_ERRORS_HPP
#define RERE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rere {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map families of failures onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class CatalogError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ModelStateError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch, long step)
      : Error("epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ": " + what),
        epoch_(epoch),
        step_(step) {}
  int epoch() const noexcept { return epoch_; }
  long step() const noexcept { return step_; }

 private:
  int epoch_;
  long step_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace rere

#endif  // RERE_ERRORS_HPP
