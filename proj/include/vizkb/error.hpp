#pragma once

#include <stdexcept>
#include <string>

namespace vizkb {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A spec that cannot be interpreted at all (dangling field reference, bad enum,
// broken encoding invariants). Distinct from hard-constraint violations.
class StructuralError : public Error {
public:
    using Error::Error;
};

class UnknownFeature : public Error {
public:
    explicit UnknownFeature(const std::string& name)
        : Error("unknown feature: " + name), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

// The enumerator visited more search nodes than allowed.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace vizkb
