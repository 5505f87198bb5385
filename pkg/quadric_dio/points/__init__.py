"""射影有理点的枚举、计数与保高度嵌入。"""
