#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "pbtdyn/log.hpp"

int main(int argc, char** argv) {
  pbtdyn::set_warnings_enabled(false);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
