#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lmce/errors.hpp"

namespace lmce {

// Small arithmetic expression evaluator for config files: variables x1..x8
// (x, y, z aliases), r = |x|, constants pi and e, operators + - * / ^, and
// the usual single/double-argument math functions.
class Expression {
public:
    struct Node;

    static Expression parse(const std::string& text);

    double eval(const double* x, int n) const;

    const std::string& text() const { return text_; }

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace lmce
