# Problems module
