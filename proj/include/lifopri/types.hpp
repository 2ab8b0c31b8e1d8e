#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lifopri {

/// Simulated time in seconds.
using Seconds = double;

using SessionId = std::uint32_t;
using AttemptId = std::uint32_t;

/// The eight page classes of the store. Order matters: it is the row/column
/// order of the transition matrix, and Exit follows Confirm.
enum class RequestKind : std::uint8_t {
  Main,      // Br-1
  Browse,    // Br-2
  Search,    // Br-3
  Details,   // Br-4
  Login,     // Tr-1
  Shipping,  // Tr-2
  Payment,   // Tr-3
  Confirm,   // Tr-4
};

inline constexpr std::size_t kKindCount = 8;
/// Kinds plus the absorbing Exit state.
inline constexpr std::size_t kStateCount = kKindCount + 1;
inline constexpr std::size_t kExit = kKindCount;

enum class RequestClass : std::uint8_t { Browsing, Transaction };

inline constexpr std::array<RequestKind, kKindCount> kAllKinds = {
    RequestKind::Main,  RequestKind::Browse,   RequestKind::Search,  RequestKind::Details,
    RequestKind::Login, RequestKind::Shipping, RequestKind::Payment, RequestKind::Confirm};

constexpr std::size_t index_of(RequestKind k) { return static_cast<std::size_t>(k); }
constexpr RequestKind kind_at(std::size_t i) { return static_cast<RequestKind>(i); }

constexpr RequestClass class_of(RequestKind k) {
  return index_of(k) < 4 ? RequestClass::Browsing : RequestClass::Transaction;
}

constexpr bool is_transaction(RequestKind k) { return class_of(k) == RequestClass::Transaction; }

/// Short label, e.g. "Br-1" or "Tr-4".
std::string_view label(RequestKind k);
/// Page name, e.g. "Main" or "Confirm".
std::string_view page_name(RequestKind k);
std::string_view class_name(RequestClass c);
/// Accepts the short label ("Br-2") or the page name ("Browse"); "Exit" maps to kExit.
std::optional<std::size_t> parse_state(std::string_view text);

/// Set of request kinds, used for queue routing and metric filters.
using KindSet = std::bitset<kKindCount>;

KindSet all_kinds();
KindSet kinds_of(RequestClass c);
KindSet only(RequestKind k);

enum class Errc {
  RowNotStochastic,
  NegativeEntry,
  ExitNotAbsorbing,
  ExitUnreachable,
  SingularSystem,
  PriorityInversion,
  NoMatchingQueue,
  SchedulePast,
  DoubleCount,
  EmptySet,
  NoConvergence,
  ConfigInvalid,
  IoError,
};

std::string_view errc_name(Errc e);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace lifopri
