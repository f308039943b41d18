#include "presets.hpp"

namespace pivot {

namespace {

ObjectSpec rectangle(const std::string& name, double mass_g, double l_mm,
                     double w_mm) {
  ObjectSpec o;
  o.name = name;
  o.shape = Shape::kRectangle;
  o.mass = mass_g * 1e-3;
  o.length = l_mm * 1e-3;
  o.width = w_mm * 1e-3;
  o.mu_A = 0.3;
  o.mu_B = 0.3;
  o.mu_P = 0.8;
  o.validate();
  return o;
}

ObjectSpec peg(const std::string& name, double mass_g, double l1_mm,
               double l2_mm, double w1_mm, double w2_mm) {
  ObjectSpec o;
  o.name = name;
  o.shape = Shape::kPeg;
  o.mass = mass_g * 1e-3;
  o.step_length = l1_mm * 1e-3;
  o.length = l2_mm * 1e-3;
  o.step_width = w1_mm * 1e-3;
  o.width = w2_mm * 1e-3;
  o.mu_A = 0.3;
  o.mu_B = 0.3;
  o.mu_P = 0.8;
  o.validate();
  return o;
}

}  // namespace

ObjectSpec make_gear1() { return rectangle("gear1", 140, 84, 20); }
ObjectSpec make_gear2() { return rectangle("gear2", 100, 121, 9.5); }
ObjectSpec make_gear3() { return rectangle("gear3", 280, 84, 20); }
ObjectSpec make_peg1() { return peg("peg1", 45, 36, 40, 20, 28); }
ObjectSpec make_peg2() { return peg("peg2", 85, 28, 40, 10, 11); }
ObjectSpec make_peg3() { return peg("peg3", 85, 28, 40, 10, 27.5); }

ObjectSpec make_object(const std::string& name) {
  if (name == "gear1") return make_gear1();
  if (name == "gear2") return make_gear2();
  if (name == "gear3") return make_gear3();
  if (name == "peg1") return make_peg1();
  if (name == "peg2") return make_peg2();
  if (name == "peg3") return make_peg3();
  throw ConfigError("unknown object preset: " + name);
}

}  // namespace pivot
