#pragma once

#include "types.hpp"

namespace pivot {

// Sample objects used throughout the tests and example configs.
ObjectSpec make_gear1();
ObjectSpec make_gear2();
ObjectSpec make_gear3();
ObjectSpec make_peg1();
ObjectSpec make_peg2();
ObjectSpec make_peg3();

// Lookup by name ("gear1".."peg3"); throws ConfigError on unknown names.
ObjectSpec make_object(const std::string& name);

}  // namespace pivot
