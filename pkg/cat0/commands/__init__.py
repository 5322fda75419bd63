# Subcommand groups for the cat0 command line
