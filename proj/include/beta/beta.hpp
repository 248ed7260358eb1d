#pragma once

#include "beta/error.hpp"
#include "beta/linalg.hpp"
#include "beta/logic.hpp"
#include "beta/machine.hpp"
#include "beta/omega.hpp"
#include "beta/dsl/ast.hpp"
#include "beta/dsl/format.hpp"
#include "beta/dsl/interpreter.hpp"
#include "beta/dsl/lexer.hpp"
#include "beta/dsl/parser.hpp"
#include "beta/dsl/resolver.hpp"
