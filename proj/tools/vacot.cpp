// SPDX-License-Identifier: Apache-2.0
#include "vacot/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return vacot::cli::run(argc, argv, std::cout, std::cerr);
}
