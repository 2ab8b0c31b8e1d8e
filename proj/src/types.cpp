#include "lifopri/types.hpp"

namespace lifopri {

namespace {
constexpr std::array<std::string_view, kKindCount> kLabels = {"Br-1", "Br-2", "Br-3", "Br-4",
                                                              "Tr-1", "Tr-2", "Tr-3", "Tr-4"};
constexpr std::array<std::string_view, kKindCount> kPages = {
    "Main", "Browse", "Search", "Details", "Login", "Shipping", "Payment", "Confirm"};
}  // namespace

std::string_view label(RequestKind k) { return kLabels[index_of(k)]; }
std::string_view page_name(RequestKind k) { return kPages[index_of(k)]; }

std::string_view class_name(RequestClass c) {
  return c == RequestClass::Browsing ? "Browsing" : "Transaction";
}

std::optional<std::size_t> parse_state(std::string_view text) {
  if (text == "Exit") return kExit;
  for (std::size_t i = 0; i < kKindCount; ++i) {
    if (text == kLabels[i] || text == kPages[i]) return i;
  }
  return std::nullopt;
}

KindSet all_kinds() { return KindSet{}.set(); }

KindSet kinds_of(RequestClass c) {
  KindSet s;
  for (auto k : kAllKinds) s.set(index_of(k), class_of(k) == c);
  return s;
}

KindSet only(RequestKind k) { return KindSet{}.set(index_of(k)); }

std::string_view errc_name(Errc e) {
  switch (e) {
    case Errc::RowNotStochastic: return "RowNotStochastic";
    case Errc::NegativeEntry: return "NegativeEntry";
    case Errc::ExitNotAbsorbing: return "ExitNotAbsorbing";
    case Errc::ExitUnreachable: return "ExitUnreachable";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::PriorityInversion: return "PriorityInversion";
    case Errc::NoMatchingQueue: return "NoMatchingQueue";
    case Errc::SchedulePast: return "SchedulePast";
    case Errc::DoubleCount: return "DoubleCount";
    case Errc::EmptySet: return "EmptySet";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace lifopri
