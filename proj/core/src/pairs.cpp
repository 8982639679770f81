#include "fisheyedist/pairs.hpp"

namespace fisheyedist {

std::string_view to_string(PairCategory c) {
  switch (c) {
    case PairCategory::VV: return "VV";
    case PairCategory::VO: return "VO";
    case PairCategory::OO: return "OO";
  }
  return "??";
}

std::optional<PairCategory> parse_category(std::string_view s) {
  if (s == "VV" || s == "V-V") return PairCategory::VV;
  if (s == "VO" || s == "V-O" || s == "OV" || s == "O-V") return PairCategory::VO;
  if (s == "OO" || s == "O-O") return PairCategory::OO;
  return std::nullopt;
}

}  // namespace fisheyedist
