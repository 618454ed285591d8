#include "pinnburn/cli.hpp"

int main(int argc, char** argv) { return pinnburn::dispatch(argc, argv); }
