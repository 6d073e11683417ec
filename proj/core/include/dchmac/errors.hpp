#pragma once

#include <stdexcept>
#include <string>

namespace dchmac {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RoleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal consistency failure inside the simulation loop.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lower(lo), upper(hi) {}
  double lower;
  double upper;
};

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string p)
      : std::runtime_error(what + ": " + p), path(std::move(p)) {}
  std::string path;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dchmac
