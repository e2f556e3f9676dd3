#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"
#include "okbc/log.hpp"

int main(int argc, char** argv) {
  okbc::log::level() = okbc::log::Level::error;
  return doctest::Context(argc, argv).run();
}
