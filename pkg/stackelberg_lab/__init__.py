# Stackelberg learning lab: repeated games between an optimizer and a no-regret learner
