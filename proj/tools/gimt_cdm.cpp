#include "gimt_cdm/commands.hpp"

int main(int argc, char** argv) {
  return gimt_cdm::app::run_cli(argc, argv);
}
