#include <iostream>

#include "hypflow/app.hpp"

int main(int argc, char** argv) { return hypflow::app::main_entry(argc, argv, std::cout, std::cerr); }
