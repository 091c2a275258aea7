// Copyright 2026 The byzagg authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace byzagg {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DivisionByZero : Error {
  DivisionByZero() : Error("division by zero in field") {}
};

struct EmbeddingOverflow : Error {
  explicit EmbeddingOverflow(const std::string& what) : Error(what) {}
};

struct DuplicateEvalPoint : Error {
  DuplicateEvalPoint() : Error("duplicate evaluation point") {}
};

// No codeword of the requested degree agrees with enough evaluations.
// At the protocol level this signals more than the tolerated number of
// corruptions and triggers an abort.
struct DecodingFailure : Error {
  explicit DecodingFailure(const std::string& what = "Reed-Solomon decoding failure")
      : Error(what) {}
};

struct InsufficientClients : Error {
  explicit InsufficientClients(const std::string& what) : Error(what) {}
};

struct DealerExcluded : Error {
  explicit DealerExcluded(int dealer)
      : Error("dealer " + std::to_string(dealer) + " excluded after failed verification"),
        dealer_id(dealer) {}
  int dealer_id;
};

struct FieldTooSmall : Error {
  FieldTooSmall(unsigned long long q, unsigned long long required)
      : Error("field size " + std::to_string(q) + " below required " + std::to_string(required)),
        minimal_q(required) {}
  unsigned long long minimal_q;
};

struct InvalidGradient : Error {
  explicit InvalidGradient(const std::string& what) : Error(what) {}
};

struct OverflowSuspected : Error {
  explicit OverflowSuspected(const std::string& what) : Error(what) {}
};

struct ConfigInvalid : Error {
  explicit ConfigInvalid(const std::string& what) : Error(what) {}
};

struct ProtocolAbort : Error {
  explicit ProtocolAbort(const std::string& what) : Error(what) {}
};

struct InvalidAttackTarget : Error {
  explicit InvalidAttackTarget(const std::string& what) : Error(what) {}
};

struct InvalidLoss : Error {
  explicit InvalidLoss(const std::string& what) : Error(what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace byzagg
