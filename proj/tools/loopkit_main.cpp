#include <iostream>

#include "loopkit/cli.hpp"

int main(int argc, char** argv) {
  return loopkit::dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}
