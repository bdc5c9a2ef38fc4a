#include "aptc/term.hpp"
