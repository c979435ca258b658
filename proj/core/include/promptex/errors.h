// Copyright 2026 The Promptex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROMPTEX_ERRORS_H_
#define PROMPTEX_ERRORS_H_

#include <stdexcept>
#include <string>

namespace promptex {

// Raised for malformed inputs: corpus lines, config files, rating tables.
// The CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a statistic is undefined because an input has no variance.
class ZeroVarianceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised when the training loss becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, int batch, double loss);

  int epoch() const { return epoch_; }
  int batch() const { return batch_; }
  double loss() const { return loss_; }

 private:
  int epoch_;
  int batch_;
  double loss_;
};

}  // namespace promptex

#endif  // PROMPTEX_ERRORS_H_
