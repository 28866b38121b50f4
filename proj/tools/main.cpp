#include <string>
#include <vector>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  return ladbnet::app::run(std::vector<std::string>(argv + 1, argv + argc));
}
