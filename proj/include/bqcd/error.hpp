#pragma once

#include <stdexcept>
#include <string>

namespace bqcd {

// Error classes map one-to-one onto CLI exit codes (see exit_code_for).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class simulation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum exit_code : int {
  exit_success = 0,
  exit_config_error = 2,
  exit_simulation_error = 3,
  exit_io_error = 4,
};

}  // namespace bqcd
