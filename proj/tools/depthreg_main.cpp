#include "depthreg/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return depthreg::cli::main_entry(argc, argv, std::cout, std::cerr);
}
