#include "xpca/model.hpp"

#include <stdexcept>

namespace xpca {

std::string to_string(Method m) {
  switch (m) {
    case Method::PCA: return "pca";
    case Method::COCA: return "coca";
    case Method::XPCA: return "xpca";
  }
  return "unknown";
}

Method parse_method(const std::string& s) {
  if (s == "pca") return Method::PCA;
  if (s == "coca") return Method::COCA;
  if (s == "xpca") return Method::XPCA;
  throw std::invalid_argument("unknown method '" + s + "'");
}

std::string to_string(TieRule t) { return t == TieRule::Midpoint ? "midpoint" : "maximum"; }

TieRule parse_tie_rule(const std::string& s) {
  if (s == "midpoint") return TieRule::Midpoint;
  if (s == "maximum") return TieRule::Maximum;
  throw std::invalid_argument("unknown tie rule '" + s + "'");
}

}  // namespace xpca
