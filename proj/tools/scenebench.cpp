#include "scenebench/cli.hpp"

int main(int argc, char** argv) { return scenebench::dispatch(argc, argv); }
