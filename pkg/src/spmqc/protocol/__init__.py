"""Monte Carlo protocol engine: event sampling, coding, key sink and session loop."""
